#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pricing {

// Non-owning view of n observations: X is row-major n x d with x = (z', p),
// y length n, w optional per-row weights (null means all-ones).
struct DataView {
  const double* X = nullptr;
  const double* y = nullptr;
  const double* w = nullptr;
  long n = 0;
  int d = 0;

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Eigen::Map<const RowMajor> Xm() const { return {X, n, d}; }
  Eigen::Map<const Eigen::VectorXd> yv() const { return {y, n}; }

  double weight(long i) const { return w ? w[i] : 1.0; }
  double weight_sum() const {
    if (!w) return double(n);
    double s = 0.0;
    for (long i = 0; i < n; ++i) s += w[i];
    return s;
  }
};

// Growable observation buffer with cheap front erasure (sliding windows).
class Dataset {
 public:
  explicit Dataset(int d) : d_(d) {}

  int dim() const { return d_; }
  long size() const { return long(y_.size()) - off_; }

  void append(const Eigen::VectorXd& z, double p, double y, long period) {
    if (z.size() != d_ - 1) throw std::invalid_argument("covariate dimension mismatch");
    size_t base = X_.size();
    X_.resize(base + d_);
    for (int j = 0; j < d_ - 1; ++j) X_[base + j] = z[j];
    X_[base + d_ - 1] = p;
    y_.push_back(y);
    period_.push_back(period);
  }

  void clear() {
    X_.clear();
    y_.clear();
    period_.clear();
    off_ = 0;
  }

  // drop the k oldest rows (O(1); storage reclaimed on clear)
  void erase_front(long k) {
    if (k <= 0) return;
    if (k >= size()) { clear(); return; }
    off_ += k;
  }

  long period(long i) const { return period_[off_ + i]; }

  DataView view() const {
    return {X_.data() + size_t(off_) * d_, y_.data() + off_, nullptr, size(), d_};
  }

  DataView view(long lo, long hi) const {  // rows [lo, hi)
    if (lo < 0 || hi > size() || lo > hi) throw std::out_of_range("view range");
    return {X_.data() + size_t(off_ + lo) * d_, y_.data() + off_ + lo, nullptr, hi - lo, d_};
  }

  DataView weighted_view(const std::vector<double>& w) const {
    if (long(w.size()) != size()) throw std::invalid_argument("weight length");
    return {X_.data() + size_t(off_) * d_, y_.data() + off_, w.data(), size(), d_};
  }

 private:
  int d_;
  long off_ = 0;
  std::vector<double> X_, y_;
  std::vector<long> period_;
};

}  // namespace pricing
