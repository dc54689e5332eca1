#include "pricing/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pricing/kernels.hpp"

namespace pricing {

namespace {

void soft_threshold(const Vector& v, double t, Vector& out) {
  out = (v.array().abs() - t).max(0.0) * v.array().sign();
}

// largest eigenvalue of X'WX by power iteration (upper-bounds the smooth
// part's curvature once multiplied by max psi'')
double xtwx_spectral(const DataView& data) {
  const auto X = data.Xm();
  Vector v = Vector::Constant(data.d, 1.0 / std::sqrt(double(data.d)));
  Vector u(data.n), t(data.d);
  double lam = 1.0;
  for (int it = 0; it < 12; ++it) {
    u.noalias() = X * v;
    if (data.w)
      for (long i = 0; i < data.n; ++i) u[i] *= data.w[i];
    t.noalias() = X.transpose() * u;
    lam = t.norm();
    if (lam <= 0) return 1.0;
    v = t / lam;
  }
  return lam;
}

double psi2_bound(Family fam) {
  switch (fam) {
    case Family::Gaussian: return 1.0;
    case Family::Logistic: return 0.25;
    case Family::Poisson:  return 1.0;  // starting guess; backtracking adapts
  }
  return 1.0;
}

double kkt_violation_at(const Vector& theta, const Vector& grad, double lam_n) {
  double v = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    double vj = theta[j] != 0.0
                    ? std::abs(grad[j] + lam_n * (theta[j] > 0 ? 1.0 : -1.0))
                    : std::max(0.0, std::abs(grad[j]) - lam_n);
    v = std::max(v, vj);
  }
  return v;
}

// exact minimizer for the Gaussian lambda=0 case: weighted least squares
FitResult gaussian_ls(const DataView& data) {
  const auto X = data.Xm();
  const int d = data.d;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  Vector b = Vector::Zero(d);
  for (long i = 0; i < data.n; ++i) {
    double wi = data.weight(i);
    A.noalias() += wi * X.row(i).transpose() * X.row(i);
    b.noalias() += wi * data.y[i] * X.row(i).transpose();
  }
  A.diagonal().array() += 1e-12 * (1.0 + A.trace() / d);
  FitResult r;
  r.theta = A.ldlt().solve(b);
  r.nll = nll(Family::Gaussian, data, r.theta);
  r.objective = r.nll;
  r.converged = true;
  Vector g(d);
  nll_grad(Family::Gaussian, data, r.theta, g);
  r.kkt_violation = g.cwiseAbs().maxCoeff();
  return r;
}

// damped Newton refinement for unpenalized fits (small d); halving line search
void newton_refine(Family fam, const DataView& data, Vector& theta, double& f) {
  const auto X = data.Xm();
  const int d = data.d;
  Vector g(d), eta(data.n), step(d);
  Eigen::MatrixXd H(d, d);
  for (int it = 0; it < 50; ++it) {
    f = nll_grad(fam, data, theta, g);
    if (g.cwiseAbs().maxCoeff() < 1e-10 * (1.0 + std::abs(f))) break;
    eta.noalias() = X * theta;
    H.setZero();
    for (long i = 0; i < data.n; ++i) {
      double w2 = data.weight(i) * psi_all(fam, eta[i]).d2;
      H.noalias() += w2 * X.row(i).transpose() * X.row(i);
    }
    H.diagonal().array() += 1e-10 * (1.0 + H.trace() / d);
    step = H.ldlt().solve(g);
    double t = 1.0;
    bool moved = false;
    for (int h = 0; h < 40; ++h, t *= 0.5) {
      Vector cand = theta - t * step;
      double fc = nll(fam, data, cand);
      if (fc < f) {
        theta = cand;
        f = fc;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
}

}  // namespace

void project_l1_ball(Vector& v, double r) {
  if (r < 0) throw std::invalid_argument("l1 radius");
  double s = v.cwiseAbs().sum();
  if (s <= r) return;
  std::vector<double> a(v.data(), v.data() + v.size());
  for (auto& x : a) x = std::abs(x);
  std::sort(a.begin(), a.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    cum += a[k];
    double t = (cum - r) / double(k + 1);
    if (k + 1 == a.size() || a[k + 1] <= t) {
      tau = t;
      break;
    }
  }
  Vector out;
  soft_threshold(v, tau, out);
  v.swap(out);
}

FitResult lasso_fit(Family fam, const DataView& data, const LassoConfig& cfg,
                    const Vector* warm_start) {
  if (data.n < 1) throw std::invalid_argument("empty data");
  const int d = data.d;

  if (cfg.lambda == 0.0 && !cfg.l1_budget && fam == Family::Gaussian)
    return gaussian_ls(data);

  const Vector* ctr = cfg.l1_center ? &*cfg.l1_center : nullptr;
  if (ctr && cfg.l1_budget)
    throw std::invalid_argument("l1 center and l1 budget are incompatible");
  if (ctr && ctr->size() != d)
    throw std::invalid_argument("l1 center dimension");

  const double wsum = data.weight_sum();
  if (wsum <= 0) throw std::invalid_argument("weights sum to zero");
  const double lam_n = cfg.lambda * std::sqrt(wsum);
  constexpr double kArmijo = 1e-4;

  auto prox = [&](const Vector& v, double t, Vector& out) {
    if (ctr) {
      soft_threshold(v - *ctr, lam_n * t, out);
      out += *ctr;
      return;
    }
    soft_threshold(v, lam_n * t, out);
    if (cfg.l1_budget) project_l1_ball(out, *cfg.l1_budget);
  };
  auto l1 = [&](const Vector& th) {
    return ctr ? (th - *ctr).cwiseAbs().sum() : th.cwiseAbs().sum();
  };
  auto kkt_at = [&](const Vector& th, const Vector& gr) {
    return ctr ? kkt_violation_at(th - *ctr, gr, lam_n)
               : kkt_violation_at(th, gr, lam_n);
  };

  Vector x = warm_start ? *warm_start : (ctr ? *ctr : Vector::Zero(d));
  if (x.size() != d) throw std::invalid_argument("warm start dimension");
  if (cfg.l1_budget) project_l1_ball(x, *cfg.l1_budget);

  double step = 1.0 / std::max(1e-12, psi2_bound(fam) * xtwx_spectral(data));
  Vector g(d), cand(d), y = x, x_old = x;
  double Fx = nll_grad(fam, data, x, g) + lam_n * l1(x);
  double t_mom = 1.0;

  FitResult res;
  int streak = 0;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    const bool from_y = cfg.accelerate && t_mom > 1.0;
    const Vector& base = from_y ? y : x;
    double fb = nll_grad(fam, data, base, g);

    // backtracking by halving
    double fc = 0.0;
    for (int h = 0;; ++h) {
      prox(base - step * g, step, cand);
      fc = nll(fam, data, cand);
      bool ok;
      if (from_y) {
        // quadratic majorization at the extrapolation point
        ok = fc <= fb + g.dot(cand - base) +
                       0.5 / step * (cand - base).squaredNorm() +
                       1e-12 * (1.0 + std::abs(fc));
      } else {
        // Armijo sufficient decrease on the penalized objective
        double model_dec = g.dot(cand - x) + lam_n * (l1(cand) - l1(x));
        ok = fc + lam_n * l1(cand) <= Fx + kArmijo * model_dec;
        if (model_dec >= 0.0) ok = true;  // stationary: no descent direction
      }
      if (ok || h > 60) break;
      step *= 0.5;
    }
    double Fcand = fc + lam_n * l1(cand);

    // monotone update: keep the incumbent if the candidate is worse
    Vector z = cand;
    if (Fcand > Fx) {
      cand = x;
      Fcand = Fx;
      if (from_y) { t_mom = 1.0; y = x; }  // momentum restart
    }

    double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
    if (cfg.accelerate)
      y = cand + (t_mom / t_new) * (z - cand) +
          ((t_mom - 1.0) / t_new) * (cand - x_old);
    t_mom = t_new;
    x_old = x;

    double rel = (Fx - Fcand) / std::max(1.0, std::abs(Fcand));
    x.swap(cand);
    Fx = Fcand;

    if (rel < cfg.tol) {
      if (++streak >= 2) {
        nll_grad(fam, data, x, g);
        double viol = kkt_at(x, g);
        if (viol <= cfg.kkt_tol * (1.0 + g.cwiseAbs().maxCoeff())) {
          res.converged = true;
          res.kkt_violation = viol;
          ++it;
          break;
        }
        streak = 0;
        y = x;        // KKT not met: drop momentum, enlarge step, keep going
        t_mom = 1.0;
        step *= 2.0;
      }
    } else {
      streak = 0;
    }
  }

  res.iters = it;
  res.theta = x;
  res.nll = nll_grad(fam, data, x, g);
  if (!res.converged) res.kkt_violation = kkt_at(x, g);

  if (cfg.lambda == 0.0 && !cfg.l1_budget && cfg.newton_polish) {
    double f = res.nll;
    newton_refine(fam, data, res.theta, f);
    res.nll = f;
    res.converged = true;
    nll_grad(fam, data, res.theta, g);
    res.kkt_violation = g.cwiseAbs().maxCoeff();
  }
  res.objective = res.nll + lam_n * l1(res.theta);
  return res;
}

CvResult cross_validate_lambda(Family fam, const DataView& pilot,
                               const std::vector<double>& c_grid, int folds,
                               long horizon_T, int dim_d) {
  if (c_grid.empty()) throw std::invalid_argument("empty grid");
  if (pilot.n < folds || folds < 2) throw std::invalid_argument("folds");

  CvResult out;
  bool constant_y = true;
  for (long i = 1; i < pilot.n && constant_y; ++i)
    constant_y = pilot.y[i] == pilot.y[0];
  if (constant_y && fam == Family::Logistic) {
    out.degenerate = true;
    out.c = *std::max_element(c_grid.begin(), c_grid.end());
    out.lambda = lambda_rule(out.c, horizon_T, dim_d);
    return out;
  }

  const int d = pilot.d;
  // materialize fold splits once (train folds need contiguous storage)
  std::vector<std::vector<double>> Xtr(folds), ytr(folds), Xte(folds), yte(folds);
  for (long i = 0; i < pilot.n; ++i) {
    int f = int(i % folds);
    const double* row = pilot.X + i * d;
    for (int k = 0; k < folds; ++k) {
      auto& X = (k == f) ? Xte[k] : Xtr[k];
      auto& y = (k == f) ? yte[k] : ytr[k];
      X.insert(X.end(), row, row + d);
      y.push_back(pilot.y[i]);
    }
  }

  out.held_out_nll.assign(c_grid.size(), 0.0);
  for (size_t gi = 0; gi < c_grid.size(); ++gi) {
    LassoConfig cfg;
    cfg.lambda = lambda_rule(c_grid[gi], horizon_T, dim_d);
    double total = 0.0;
    for (int k = 0; k < folds; ++k) {
      DataView tr{Xtr[k].data(), ytr[k].data(), nullptr, long(ytr[k].size()), d};
      DataView te{Xte[k].data(), yte[k].data(), nullptr, long(yte[k].size()), d};
      auto fit = lasso_fit(fam, tr, cfg);
      total += nll(fam, te, fit.theta);
    }
    out.held_out_nll[gi] = total / double(pilot.n);
  }

  size_t best = 0;
  for (size_t gi = 1; gi < c_grid.size(); ++gi)
    if (out.held_out_nll[gi] < out.held_out_nll[best]) best = gi;
  out.c = c_grid[best];
  out.lambda = lambda_rule(out.c, horizon_T, dim_d);
  return out;
}

double lambda_rule(double c, long T, int d) {
  return c * std::sqrt(std::log(double(T) * double(d)));
}

int experiment_block_rule(long T, int d) {
  return int(std::ceil(std::pow(std::log(double(T) * double(d)), 1.1)));
}

}  // namespace pricing
