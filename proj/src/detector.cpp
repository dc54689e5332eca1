#include "pricing/detector.hpp"

#include <cmath>
#include <string>

namespace pricing {

IntervalFitError::IntervalFitError(long lo_, long hi_)
    : std::runtime_error("fit failed to converge on rows [" +
                         std::to_string(lo_) + ", " + std::to_string(hi_) +
                         ")"),
      lo(lo_),
      hi(hi_) {}

namespace {

DataView slice(const DataView& data, long lo, long hi) {
  DataView s;
  s.X = data.X + size_t(lo) * data.d;
  s.y = data.y + lo;
  s.w = data.w ? data.w + lo : nullptr;
  s.n = hi - lo;
  s.d = data.d;
  return s;
}

// Pooled fit: solved to stationarity, since it anchors everything else.
FitResult fit_pooled(Family fam, const DataView& data, double lambda,
                     const Vector* warm) {
  LassoConfig cfg;
  cfg.lambda = lambda;
  auto fit = lasso_fit(fam, data, cfg, warm);
  if (!fit.converged) {
    // Ill-conditioned windows occasionally stall just short of the default
    // budget; continue from the stopped iterate before giving up.
    LassoConfig more = cfg;
    more.max_iters = 4 * cfg.max_iters;
    auto retry = lasso_fit(fam, data, more, &fit.theta);
    if (!retry.converged) throw IntervalFitError(0, data.n);
    return retry;
  }
  return fit;
}

// Sub-interval fit: the penalty is centered at the pooled solution, so the
// estimate leaves the pooled fit only when the interval's own likelihood
// pays for the deviation (see the protocol note in the header).
FitResult fit_side(Family fam, const DataView& data, long lo, long hi,
                   double lambda, const Vector& anchor) {
  LassoConfig cfg;
  cfg.lambda = lambda;
  cfg.l1_center = anchor;
  auto fit = lasso_fit(fam, slice(data, lo, hi), cfg, &anchor);
  if (!fit.converged) {
    // Ill-conditioned windows occasionally stall just short of the default
    // budget; continue from the stopped iterate before giving up.
    LassoConfig more = cfg;
    more.max_iters = 4 * cfg.max_iters;
    auto retry = lasso_fit(fam, slice(data, lo, hi), more, &fit.theta);
    if (!retry.converged) throw IntervalFitError(lo, hi);
    return retry;
  }
  return fit;
}

}  // namespace

double plrt_statistic(Family family, const DataView& data, long t,
                      double lambda, ScanCache* cache) {
  const long n = data.n;
  if (t < 1 || t > n - 1) throw std::invalid_argument("split index out of range");

  Vector pooled;
  double pooled_nll = 0.0;
  if (cache && cache->full_n == n) {
    pooled = cache->full_theta;
    pooled_nll = cache->full_nll;
  } else {
    const Vector* warm =
        (cache && cache->full_n > 0) ? &cache->full_theta : nullptr;
    auto full = fit_pooled(family, data, lambda, warm);
    pooled = full.theta;
    pooled_nll = full.nll;
    if (cache) {
      cache->full_theta = pooled;
      cache->full_nll = pooled_nll;
      cache->full_n = n;
    }
  }

  auto left = fit_side(family, data, 0, t, lambda, pooled);
  auto right = fit_side(family, data, t, n, lambda, pooled);

  double pen = lambda * std::sqrt(double(t)) * (pooled - left.theta).lpNorm<1>() +
               lambda * std::sqrt(double(n - t)) *
                   (pooled - right.theta).lpNorm<1>();
  return pooled_nll - left.nll - right.nll + pen;
}

CptVerdict cpt_scan(Family family, const DataView& data,
                    const CptConfig& config, ScanCache* cache) {
  if (config.m < 1 || config.gamma <= 0 || config.stride < 1)
    throw std::invalid_argument("cpt config");

  CptVerdict v;
  const long n = data.n;
  const long m = config.m;
  if (n < 2 * m) return v;  // detection needs two full experiment blocks

  ScanCache local;
  ScanCache* c = cache ? cache : &local;
  for (long t = m; t <= n - m; t += config.stride) {
    double D = plrt_statistic(family, data, t, config.lambda, c);
    v.scanned_t.push_back(t);
    v.statistic_path.push_back(D);
    if (D > config.gamma) {
      v.detected = true;
      v.trigger_index = t;
      break;
    }
  }
  return v;
}

}  // namespace pricing
