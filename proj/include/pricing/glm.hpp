#pragma once
#include <Eigen/Dense>
#include <optional>

#include "pricing/rng.hpp"

namespace pricing {

using Vector = Eigen::VectorXd;

enum class Family { Gaussian, Logistic, Poisson };

struct PsiVals {
  double value;   // psi(x)
  double d1;      // psi'(x), the mean function
  double d2;      // psi''(x), the conditional variance (unit scale)
};

// Log-partition function and derivatives. Overflow-safe for Logistic:
// log(1+e^x) = x + log1p(e^-x) for x > 0.
PsiVals psi_all(Family fam, double x);
double psi(Family fam, double x);
double psi_d1(Family fam, double x);

// E[y | z, p] = psi'(z'alpha + beta p); theta = (alpha, beta), price last.
double expected_demand(Family fam, const Vector& theta, const Vector& z, double p);

// Expected revenue p * psi'(x'theta).
double revenue(Family fam, const Vector& theta, const Vector& z, double p);

struct PriceResult {
  double price = 0.0;
  bool degenerate = false;  // beta >= 0: revenue has no interior maximizer
};

// Revenue-maximizing price over [p_lo, p_hi].
//   Gaussian: -z'alpha / (2 beta);  Poisson: -1/beta;
//   Logistic: root of 1 + exp(z'alpha + beta p) + beta p = 0 by bisection,
//             golden-section fallback when the bracket has no sign change.
// beta >= 0 returns p_hi with the degenerate flag set.
PriceResult optimal_price(Family fam, const Vector& theta, const Vector& z,
                          double p_lo, double p_hi);

// One demand draw: Normal(mu, scale) / Bernoulli(mu) / Poisson(mu).
double sample_demand(Family fam, const Vector& theta, const Vector& z, double p,
                     Rng& rng, double scale = 1.0);

struct KlEstimate {
  double value;
  double std_error;
};

// Monte Carlo KL divergence between demand models theta1 (truth) and theta2,
// with z = (1, u_1..u_{d-2}), u_i iid U(0,1), and p ~ U[p_lo, p_hi].
// Uses the conditional KL in closed form (Bregman divergence of psi), so only
// (z, p) is sampled.
KlEstimate kl_divergence_mc(Family fam, const Vector& theta1, const Vector& theta2,
                            double p_lo, double p_hi, long n_samples, Rng& rng);

}  // namespace pricing
