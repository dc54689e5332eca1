#pragma once
#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "pricing/dataset.hpp"
#include "pricing/glm.hpp"

namespace pricing {

struct LassoConfig {
  double lambda = 0.0;      // objective: sum_i w_i nll_i + lambda*sqrt(sum w)*||theta||_1
  std::optional<double> l1_budget;  // optional hard cap on ||theta||_1
  int max_iters = 5000;
  double tol = 1e-8;        // relative objective change
  double kkt_tol = 1e-4;    // subgradient violation scale at exit
  bool accelerate = true;   // monotone accelerated proximal gradient
  bool newton_polish = false;  // refine lambda=0 fits with damped Newton
  // Optional center a of the penalty: lambda*sqrt(sum w)*||theta - a||_1.
  // Unset penalizes around zero (the plain Lasso). Incompatible with
  // l1_budget. Used by the detector, whose sub-interval fits deviate from
  // the pooled fit only when the likelihood pays for it.
  std::optional<Vector> l1_center;
};

struct FitResult {
  Vector theta;
  double objective = 0.0;   // penalized value at theta
  double nll = 0.0;         // unpenalized negative log-likelihood at theta
  int iters = 0;
  bool converged = false;
  double kkt_violation = 0.0;
};

// Proximal-gradient L1-penalized GLM fit (soft-threshold prox, step halving
// with Armijo constant 1e-4, optional acceleration kept monotone by falling
// back to the plain proximal step whenever the accelerated candidate fails
// to improve the objective).
FitResult lasso_fit(Family fam, const DataView& data, const LassoConfig& cfg,
                    const Vector* warm_start = nullptr);

// Euclidean projection onto the L1 ball of radius r (Duchi et al. pivot scheme).
void project_l1_ball(Vector& v, double r);

struct CvResult {
  double lambda = 0.0;      // selected lambda = c * sqrt(log(T*d))
  double c = 0.0;
  std::vector<double> held_out_nll;  // per grid point, same order as c_grid
  bool degenerate = false;  // constant-y pilot: largest candidate returned
};

// Pilot cross-validation over lambda = c*sqrt(log(T*d)), c in c_grid.
// folds == n reproduces leave-one-out. Fold of row i is i % folds.
// Ties in held-out NLL break toward the earlier grid entry.
CvResult cross_validate_lambda(Family fam, const DataView& pilot,
                               const std::vector<double>& c_grid, int folds,
                               long horizon_T, int dim_d);

// Tuning rules used across the artifact.
double lambda_rule(double c, long T, int d);            // c * sqrt(log(T*d))
int experiment_block_rule(long T, int d);               // ceil(log(T*d)^1.1)

}  // namespace pricing
