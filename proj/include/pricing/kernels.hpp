#pragma once
#include <Eigen/Dense>

#include "pricing/dataset.hpp"
#include "pricing/glm.hpp"

namespace pricing {

// Negative log-likelihood L(theta) = sum_i w_i { psi(x_i'theta) - y_i x_i'theta }
// and its gradient sum_i w_i (psi'(x_i'theta) - y_i) x_i.
//
// Two implementations with identical results:
//  * plain serial loops (reference),
//  * chunked reduction, parallelized with OpenMP across chunks. The chunk
//    decomposition depends only on n and partials combine in fixed chunk
//    order, so results are bit-for-bit identical for any thread count.

double nll_serial(Family fam, const DataView& data, const Vector& theta);
double nll_grad_serial(Family fam, const DataView& data, const Vector& theta,
                       Vector& grad);

double nll_chunked(Family fam, const DataView& data, const Vector& theta);
double nll_grad_chunked(Family fam, const DataView& data, const Vector& theta,
                        Vector& grad);

// default entry points (chunked)
inline double nll(Family fam, const DataView& data, const Vector& theta) {
  return nll_chunked(fam, data, theta);
}
inline double nll_grad(Family fam, const DataView& data, const Vector& theta,
                       Vector& grad) {
  return nll_grad_chunked(fam, data, theta, grad);
}

}  // namespace pricing
