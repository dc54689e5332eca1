#include "pricing/glm.hpp"

#include <cmath>
#include <stdexcept>

namespace pricing {

PsiVals psi_all(Family fam, double x) {
  switch (fam) {
    case Family::Gaussian:
      return {0.5 * x * x, x, 1.0};
    case Family::Logistic: {
      double v = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      double mu = x > 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      return {v, mu, mu * (1.0 - mu)};
    }
    case Family::Poisson: {
      double e = std::exp(x);
      return {e, e, e};
    }
  }
  throw std::logic_error("unknown family");
}

double psi(Family fam, double x) { return psi_all(fam, x).value; }
double psi_d1(Family fam, double x) { return psi_all(fam, x).d1; }

static double utility(const Vector& theta, const Vector& z, double p) {
  const auto d = theta.size();
  if (z.size() != d - 1) throw std::invalid_argument("covariate dimension mismatch");
  return theta.head(d - 1).dot(z) + theta[d - 1] * p;
}

double expected_demand(Family fam, const Vector& theta, const Vector& z, double p) {
  return psi_d1(fam, utility(theta, z, p));
}

double revenue(Family fam, const Vector& theta, const Vector& z, double p) {
  return p * expected_demand(fam, theta, z, p);
}

namespace {

double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

// golden-section maximization of revenue on [lo, hi]
double golden_max(Family fam, const Vector& theta, const Vector& z, double lo, double hi) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = revenue(fam, theta, z, c);
  double fd = revenue(fam, theta, z, d);
  while (b - a > 1e-10 * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc >= fd) {
      b = d; d = c; fd = fc;
      c = b - kInvPhi * (b - a);
      fc = revenue(fam, theta, z, c);
    } else {
      a = c; c = d; fc = fd;
      d = a + kInvPhi * (b - a);
      fd = revenue(fam, theta, z, d);
    }
  }
  double mid = 0.5 * (a + b);
  // endpoints can dominate when the stationary point lies outside [lo, hi]
  double fm = revenue(fam, theta, z, mid);
  double flo = revenue(fam, theta, z, lo), fhi = revenue(fam, theta, z, hi);
  if (flo >= fm && flo >= fhi) return lo;
  if (fhi >= fm && fhi >= flo) return hi;
  return mid;
}

}  // namespace

PriceResult optimal_price(Family fam, const Vector& theta, const Vector& z,
                          double p_lo, double p_hi) {
  if (!(p_lo < p_hi)) throw std::invalid_argument("price bounds");
  const auto d = theta.size();
  const double beta = theta[d - 1];
  const double u = theta.head(d - 1).dot(z);
  if (beta >= 0.0) return {p_hi, true};

  switch (fam) {
    case Family::Gaussian:
      return {clamp(-u / (2.0 * beta), p_lo, p_hi), false};
    case Family::Poisson:
      return {clamp(-1.0 / beta, p_lo, p_hi), false};
    case Family::Logistic: {
      // stationarity: g(p) = 1 + exp(u + beta p) + beta p = 0, g strictly
      // decreasing for beta < 0, so bisection once a sign change is bracketed
      auto g = [&](double p) { return 1.0 + std::exp(u + beta * p) + beta * p; };
      double lo = p_lo, hi = p_hi;
      double glo = g(lo), ghi = g(hi);
      if (glo > 0.0 && ghi > 0.0) return {p_hi, false};   // root beyond p_hi
      if (glo < 0.0 && ghi < 0.0) return {p_lo, false};   // root below p_lo
      if (glo == 0.0) return {lo, false};
      if (ghi == 0.0) return {hi, false};
      if (glo < 0.0)  // not monotone-bracketed as expected; fall back
        return {golden_max(fam, theta, z, p_lo, p_hi), false};
      while (hi - lo > 1e-10) {
        double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
      }
      return {0.5 * (lo + hi), false};
    }
  }
  throw std::logic_error("unknown family");
}

double sample_demand(Family fam, const Vector& theta, const Vector& z, double p,
                     Rng& rng, double scale) {
  double mu = expected_demand(fam, theta, z, p);
  switch (fam) {
    case Family::Gaussian: return rng.normal(mu, scale);
    case Family::Logistic: return rng.bernoulli(mu) ? 1.0 : 0.0;
    case Family::Poisson:  return double(rng.poisson(mu));
  }
  throw std::logic_error("unknown family");
}

KlEstimate kl_divergence_mc(Family fam, const Vector& theta1, const Vector& theta2,
                            double p_lo, double p_hi, long n_samples, Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("n_samples");
  const auto d = theta1.size();
  if (theta2.size() != d) throw std::invalid_argument("dimension mismatch");
  Vector z(d - 1);
  double sum = 0.0, sumsq = 0.0;
  for (long i = 0; i < n_samples; ++i) {
    z[0] = 1.0;
    for (Eigen::Index j = 1; j < d - 1; ++j) z[j] = rng.uniform();
    double p = rng.uniform(p_lo, p_hi);
    double eta1 = utility(theta1, z, p);
    double eta2 = utility(theta2, z, p);
    // E_{theta1}[log f1/f2 | z,p] = psi(eta2) - psi(eta1) - psi'(eta1)(eta2 - eta1)
    auto v1 = psi_all(fam, eta1);
    double kl = psi(fam, eta2) - v1.value - v1.d1 * (eta2 - eta1);
    sum += kl;
    sumsq += kl * kl;
  }
  double mean = sum / double(n_samples);
  double var = sumsq / double(n_samples) - mean * mean;
  if (var < 0) var = 0;
  return {mean, std::sqrt(var / double(n_samples))};
}

}  // namespace pricing
