#pragma once
#include <optional>
#include <stdexcept>
#include <vector>

#include "pricing/dataset.hpp"
#include "pricing/glm.hpp"
#include "pricing/lasso.hpp"

namespace pricing {

struct CptConfig {
  double lambda = 0.0;  // shared with estimation
  double gamma = 1.0;   // detection threshold
  int m = 1;            // trimming / experiment-block length
  int stride = 1;       // distance between scanned split points
};

struct CptVerdict {
  bool detected = false;
  std::optional<long> trigger_index;   // first t with D(t,n) > gamma
  std::vector<long> scanned_t;
  std::vector<double> statistic_path;  // D(t,n) per scanned t, scan order
};

// Fit non-convergence inside the detection statistic; carries the rows
// [lo, hi) of the sub-interval whose fit failed.
class IntervalFitError : public std::runtime_error {
 public:
  IntervalFitError(long lo, long hi);
  long lo, hi;
};

// Warm-start cache for repeated scans over an append-only buffer: carries the
// pooled (full-interval) fit from the previous round, keyed by the buffer
// length it was computed at. Within one scan the buffer is unchanged, so the
// pooled fit is reused outright; across scans it seeds the next pooled fit.
// The owner must clear() whenever the buffer mutates in any way other than
// appending rows, or lambda changes.
struct ScanCache {
  Vector full_theta;
  double full_nll = 0.0;
  long full_n = -1;  // buffer length the pooled fit belongs to

  void clear() { full_n = -1; }
};

// Penalized likelihood-ratio statistic for a split after the first t rows
// (left interval = rows [0, t), right = [t, n)); requires 1 <= t <= n-1.
//
// Fit protocol: the pooled fit over all n rows is the plain Lasso; each
// sub-interval fit then minimizes its own likelihood plus the same penalty
// weight applied to the deviation from the pooled solution. Under
// homogeneity the sub-interval gradients at the pooled fit sit inside the
// soft-threshold dead zone, the sub-fits stay put, and the statistic is
// exactly zero for most splits — the penalty measures only deviation the
// interval's likelihood can pay for, which is what calibrates the practical
// threshold rules; the plain-Lasso sub-fit instead always drifts by its own
// shrinkage bias, and that bias difference alone reaches the threshold at
// realistic buffer sizes. Under a change the sub-interval gradients break
// the dead zone and the statistic grows with the evidence. Nonnegativity is
// exact: D >= 2*(penalty terms) >= 0 because the pooled fit is feasible for
// both centered sub-problems and the likelihood is additive.
double plrt_statistic(Family family, const DataView& data, long t,
                      double lambda, ScanCache* cache = nullptr);

// Scan splits t = m, m+stride, ..., <= n-m in ascending order, stopping at
// the first exceedance of gamma. n < 2m returns not-detected, empty path.
CptVerdict cpt_scan(Family family, const DataView& data,
                    const CptConfig& config, ScanCache* cache = nullptr);

}  // namespace pricing
