#include "pricing/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pricing {

double ExperimentSet::draw(Rng& rng) const {
  if (levels.empty()) return rng.uniform(lo, hi);
  size_t i = std::min(levels.size() - 1, size_t(rng.uniform() * levels.size()));
  return levels[i];
}

double ExperimentSet::midpoint() const {
  if (levels.empty()) return 0.5 * (lo + hi);
  return levels[levels.size() / 2];
}

double ExperimentSet::min() const {
  return levels.empty() ? lo : *std::min_element(levels.begin(), levels.end());
}

double ExperimentSet::max() const {
  return levels.empty() ? hi : *std::max_element(levels.begin(), levels.end());
}

namespace {

void validate(const PolicyConfig& cfg) {
  if (cfg.T < 1 || cfg.d < 2 || cfg.m < 1) throw std::invalid_argument("policy config");
  if (!cfg.experiment_set.levels.empty() && cfg.experiment_set.levels.size() < 2)
    throw std::invalid_argument("finite experiment set needs at least two prices");
  if (cfg.experiment_set.min() < cfg.p_lo || cfg.experiment_set.max() > cfg.p_hi)
    throw std::invalid_argument("experiment set outside price bounds");
  if (cfg.rho_df <= 0.0 || cfg.rho_df > 1.0)
    throw std::invalid_argument("rho_df must lie in (0, 1]");
}

long n_for_k(long T, int k) {
  return long(std::ceil(std::sqrt(double(T) / double(k + 1))));
}

}  // namespace

CyclePolicy::CyclePolicy(Family family, CycleMode mode, PolicyConfig cfg)
    : fam_(family), mode_(mode), cfg_(std::move(cfg)), buffer_(cfg_.d) {
  validate(cfg_);
  n_k_ = n_for_k(cfg_.T, 0);
  if (mode_ == CycleMode::Opt) {
    for (size_t i = 1; i < cfg_.true_taus.size(); ++i)
      if (cfg_.true_taus[i] <= cfg_.true_taus[i - 1])
        throw std::invalid_argument("oracle change-points must be increasing");
  }
}

std::string CyclePolicy::name() const {
  switch (mode_) {
    case CycleMode::Cpdp:  return "CPDP";
    case CycleMode::Naive: return "Naive-DP";
    case CycleMode::Sw:    return "SW-DP";
    case CycleMode::Df:    return "DF-DP";
    case CycleMode::Opt:   return "OPT-DP";
  }
  return {};
}

double CyclePolicy::next_price(const Vector& z, long t, Rng& rng) {
  // oracle restart: fires the period right after a true change-point,
  // abandoning whatever phase the cycle was in
  if (mode_ == CycleMode::Opt) {
    while (next_tau_ < cfg_.true_taus.size() &&
           t == cfg_.true_taus[next_tau_] + 1) {
      ++k_;
      n_k_ = n_for_k(cfg_.T, k_);
      events_.push_back({t, "detect", double(cfg_.true_taus[next_tau_])});
      buffer_.clear();
      cache_.clear();
      exploring_ = true;
      phase_i_ = 0;
      ++next_tau_;
    }
  }

  double p;
  if (exploring_) {
    p = cfg_.experiment_set.draw(rng);
  } else if (!theta_) {
    p = cfg_.experiment_set.midpoint();
  } else {
    auto res = optimal_price(fam_, *theta_, z, cfg_.p_lo, cfg_.p_hi);
    p = std::clamp(res.price, cfg_.p_lo, cfg_.p_hi);
  }
  z_pending_ = z;
  p_pending_ = p;
  t_pending_ = t;
  return p;
}

void CyclePolicy::observe(double y) {
  if (exploring_) {
    buffer_.append(z_pending_, p_pending_, y, t_pending_);
    ++explored_;
    if (phase_i_ == cfg_.m - 1) {
      end_exploration_block();
      return;
    }
  } else {
    ++exploited_;
    if (phase_i_ == n_k_ - 1) {  // cycle over, next one starts exploring
      exploring_ = true;
      phase_i_ = 0;
      return;
    }
  }
  ++phase_i_;
}

void CyclePolicy::end_exploration_block() {
  if (mode_ == CycleMode::Cpdp) {
    CptConfig cc;
    cc.lambda = cfg_.lambda;
    cc.gamma = cfg_.gamma;
    cc.m = cfg_.m;
    cc.stride = cfg_.scan_stride > 0 ? cfg_.scan_stride : cfg_.m;
    bool detected = false;
    try {
      detected = cpt_scan(fam_, buffer_.view(), cc, &cache_).detected;
    } catch (const IntervalFitError&) {
      events_.push_back({t_pending_, "scan_fail", 0.0});
    }
    if (detected) {
      ++k_;
      n_k_ = n_for_k(cfg_.T, k_);
      events_.push_back({t_pending_, "detect", double(t_pending_)});
      buffer_.clear();
      cache_.clear();
      exploring_ = true;
      phase_i_ = 0;
      return;
    }
  }
  refit();
  exploring_ = false;
  phase_i_ = 0;
}

void CyclePolicy::refit() {
  if (mode_ == CycleMode::Sw && std::isfinite(cfg_.eta_sw)) {
    long keep = std::lround(cfg_.eta_sw * cfg_.m);
    if (buffer_.size() > keep) {
      buffer_.erase_front(buffer_.size() - keep);
      cache_.clear();
    }
  }

  LassoConfig lcfg;
  lcfg.lambda = cfg_.lambda;
  const Vector* warm = theta_ ? &*theta_ : nullptr;

  FitResult fit;
  if (mode_ == CycleMode::Df) {
    std::vector<double> w(size_t(buffer_.size()));
    for (long i = 0; i < buffer_.size(); ++i)
      w[size_t(i)] = std::pow(cfg_.rho_df, double(t_pending_ - buffer_.period(i)));
    fit = lasso_fit(fam_, buffer_.weighted_view(w), lcfg, warm);
  } else {
    fit = lasso_fit(fam_, buffer_.view(), lcfg, warm);
  }

  if (!fit.converged) {
    events_.push_back({t_pending_, "fit_fail", fit.kkt_violation});
    return;  // keep the previous estimate (midpoint pricing if none yet)
  }
  theta_ = fit.theta;
  events_.push_back({t_pending_, "refit", fit.nll});
  double beta = fit.theta[cfg_.d - 1];
  degenerate_ = beta >= 0.0;
  if (degenerate_)
    events_.push_back({t_pending_, "degenerate_beta", beta});
}

bool BkPolicy::is_experiment(long t, int m) {
  if (t < 1) return false;
  long L = long(std::sqrt(double(t)));
  while ((L + 1) * (L + 1) <= t) ++L;
  while (L > 0 && L * L > t) --L;
  return L >= 1 && L * L + m - 1 >= t;
}

BkPolicy::BkPolicy(Family family, PolicyConfig cfg)
    : fam_(family), cfg_(std::move(cfg)), buffer_(cfg_.d) {
  validate(cfg_);
}

double BkPolicy::next_price(const Vector& z, long t, Rng& rng) {
  pending_experiment_ = is_experiment(t, cfg_.m);
  double p;
  if (pending_experiment_) {
    p = cfg_.experiment_set.draw(rng);
  } else if (!theta_) {
    p = cfg_.experiment_set.midpoint();
  } else {
    auto res = optimal_price(fam_, *theta_, z, cfg_.p_lo, cfg_.p_hi);
    p = std::clamp(res.price, cfg_.p_lo, cfg_.p_hi);
  }
  z_pending_ = z;
  p_pending_ = p;
  t_pending_ = t;
  return p;
}

void BkPolicy::observe(double y) {
  if (!pending_experiment_) {
    ++exploited_;
    return;
  }
  buffer_.append(z_pending_, p_pending_, y, t_pending_);
  ++explored_;
  if (!is_experiment(t_pending_ + 1, cfg_.m)) refit();
}

void BkPolicy::refit() {
  LassoConfig lcfg;
  lcfg.lambda = cfg_.lambda;
  const Vector* warm = theta_ ? &*theta_ : nullptr;
  auto fit = lasso_fit(fam_, buffer_.view(), lcfg, warm);
  if (!fit.converged) {
    events_.push_back({t_pending_, "fit_fail", fit.kkt_violation});
    return;
  }
  theta_ = fit.theta;
  events_.push_back({t_pending_, "refit", fit.nll});
  degenerate_ = fit.theta[cfg_.d - 1] >= 0.0;
  if (degenerate_)
    events_.push_back({t_pending_, "degenerate_beta", fit.theta[cfg_.d - 1]});
}

std::unique_ptr<Policy> make_policy(const std::string& name, Family family,
                                    const PolicyConfig& cfg) {
  if (name == "CPDP")     return std::make_unique<CyclePolicy>(family, CycleMode::Cpdp, cfg);
  if (name == "Naive-DP") return std::make_unique<CyclePolicy>(family, CycleMode::Naive, cfg);
  if (name == "SW-DP")    return std::make_unique<CyclePolicy>(family, CycleMode::Sw, cfg);
  if (name == "DF-DP")    return std::make_unique<CyclePolicy>(family, CycleMode::Df, cfg);
  if (name == "OPT-DP")   return std::make_unique<CyclePolicy>(family, CycleMode::Opt, cfg);
  if (name == "BK-DP")    return std::make_unique<BkPolicy>(family, cfg);
  throw std::invalid_argument("unknown policy: " + name);
}

}  // namespace pricing
