#pragma once
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pricing/dataset.hpp"
#include "pricing/detector.hpp"
#include "pricing/glm.hpp"
#include "pricing/lasso.hpp"
#include "pricing/rng.hpp"

namespace pricing {

// Price experiment set: a continuous interval [lo, hi], or a finite list of
// levels when `levels` is nonempty.
struct ExperimentSet {
  double lo = 1.0, hi = 15.0;
  std::vector<double> levels;

  double draw(Rng& rng) const;
  double midpoint() const;
  double min() const;
  double max() const;
};

struct PolicyConfig {
  long T = 0;
  int d = 0;                    // covariate dim incl. intercept, plus price
  int m = 1;                    // experiment-block length
  double gamma = 1.0;           // detection threshold
  double lambda = 0.0;          // Lasso tuning parameter
  ExperimentSet experiment_set;
  double p_lo = 0.0, p_hi = 50.0;
  double eta_sw = 8.0;          // SW window in cycles (inf = keep everything)
  double rho_df = 0.99;         // DF per-period discount factor
  std::vector<long> true_taus;  // oracle change-points (OPT only)
  int scan_stride = 0;          // 0 = block-aligned (stride m)
};

struct PolicyEvent {
  long period = 0;
  std::string kind;  // detect | refit | fit_fail | scan_fail | degenerate_beta
  double value = 0.0;
};

// Non-anticipating pricing policy: next_price may use only past observations
// and the current covariates; the demand realization is fed back via observe.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual double next_price(const Vector& z, long t, Rng& rng) = 0;
  virtual void observe(double y) = 0;
  virtual std::string name() const = 0;

  const std::vector<PolicyEvent>& events() const { return events_; }
  long explored() const { return explored_; }
  long exploited() const { return exploited_; }

 protected:
  std::vector<PolicyEvent> events_;
  long explored_ = 0, exploited_ = 0;
};

enum class CycleMode { Cpdp, Naive, Sw, Df, Opt };

// Explore-m / exploit-n_k cycle engine. Cpdp restarts on detected changes,
// Opt restarts on oracle change-points, the others keep k = 0 forever and
// differ only in how the buffer enters the fit (window / discount).
class CyclePolicy : public Policy {
 public:
  CyclePolicy(Family family, CycleMode mode, PolicyConfig cfg);

  double next_price(const Vector& z, long t, Rng& rng) override;
  void observe(double y) override;
  std::string name() const override;

  int detections() const { return k_; }
  long exploit_len() const { return n_k_; }
  const std::optional<Vector>& theta_hat() const { return theta_; }

 private:
  void end_exploration_block();
  void refit();

  Family fam_;
  CycleMode mode_;
  PolicyConfig cfg_;
  Dataset buffer_;
  ScanCache cache_;

  int k_ = 0;
  long n_k_ = 0;
  bool exploring_ = true;
  long phase_i_ = 0;  // position within the current explore/exploit block
  std::optional<Vector> theta_;
  bool degenerate_ = false;
  size_t next_tau_ = 0;  // Opt: index of the next oracle change-point

  Vector z_pending_;
  double p_pending_ = 0.0;
  long t_pending_ = 0;
};

// Experiment periods on {L^2, ..., L^2+m-1 : L = 1, 2, ...}; one cumulative
// buffer, refit when an experiment run ends, exploit in between.
class BkPolicy : public Policy {
 public:
  BkPolicy(Family family, PolicyConfig cfg);

  double next_price(const Vector& z, long t, Rng& rng) override;
  void observe(double y) override;
  std::string name() const override { return "BK-DP"; }

  static bool is_experiment(long t, int m);

 private:
  void refit();

  Family fam_;
  PolicyConfig cfg_;
  Dataset buffer_;
  std::optional<Vector> theta_;
  bool degenerate_ = false;

  Vector z_pending_;
  double p_pending_ = 0.0;
  long t_pending_ = 0;
  bool pending_experiment_ = false;
};

// factory: name in {CPDP, Naive-DP, SW-DP, DF-DP, BK-DP, OPT-DP}
std::unique_ptr<Policy> make_policy(const std::string& name, Family family,
                                    const PolicyConfig& cfg);

}  // namespace pricing
