#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pricing/glm.hpp"
#include "pricing/policy.hpp"
#include "pricing/rng.hpp"

namespace pricing {

// Uniform box for covariate draws; coordinates with lo == hi are constants
// (the leading intercept in particular).
struct CovariateLaw {
  Vector lo, hi;
};

struct Segment {
  long start = 1;  // first period governed by this parameter (1-based)
  Vector theta;
  std::optional<CovariateLaw> law;  // absent = (1, U(0,1), ..., U(0,1))
};

// Piecewise-stationary demand environment. Covariates are z = (1, u_1, ...,
// u_{d-2}) with iid uniform(0,1) entries unless a replay matrix is attached,
// in which case historical covariate rows are replayed in order.
struct Environment {
  Family family = Family::Logistic;
  std::vector<Segment> segments;
  long T = 0;
  int d = 0;
  double p_lo = 0.0, p_hi = 50.0;
  std::optional<Eigen::MatrixXd> replay_z;  // T x (d-1)

  const Segment& segment_at(long t) const;
  const Vector& theta_at(long t) const { return segment_at(t).theta; }
  std::vector<long> change_points() const;  // tau_k = start_{k+1} - 1
  int upsilon() const { return int(segments.size()) - 1; }
  void draw_z(long t, Rng& rng, Vector& out) const;
  void validate() const;
};

struct RegretTrace {
  std::vector<double> inst;  // conditional expected per-period regret
  std::vector<double> cum;   // prefix sums
  std::vector<PolicyEvent> events;
  uint64_t seed = 0;
};

// One market trajectory: draw z_t, ask the policy for p_t, draw demand from
// the true model, feed it back; regret is measured against the clairvoyant
// price under the true parameters.
RegretTrace run_episode(Policy& policy, const Environment& env, Rng& rng);

// Scenario library (synthetic designs; logistic family, d = 50, price bounds
// [0, 50], experiment set [1, 15]):
//   S1 stationary; S2 one switch at T/2; S3 switches at T/4, T/2, 3T/4;
//   S2star / S3star use the rotated second parameter (harder changes);
//   S4 alternates on blocks of 10000 periods (T must be a multiple);
//   S4small is the same design on blocks of 2500 periods;
//   A-S4 / A-S5 / A-S6 are S1 / S2 / S3 with both parameters halved.
Environment scenario(const std::string& name, long T);

// Named scenario parameter vectors: theta1, theta2, theta2star, and the
// halved pair theta3 / theta4 used by the A-S variants.
Vector scenario_theta(const std::string& name);

// Per-scenario defaults: m = gamma = ceil(log(Td)^1.1), lambda via the
// 0.2 * sqrt(log(Td)) rule, experiment interval [1, 15].
PolicyConfig scenario_defaults(const Environment& env);

// OLS slope of log(mean regret) on log(horizon).
double loglog_slope(const std::vector<double>& mean_regrets,
                    const std::vector<double>& horizons);

struct EpisodeSummary {
  std::string policy;
  long T = 0;
  int run_id = 0;
  uint64_t seed = 0;
  double total_regret = 0.0;
  int detections = 0;
  std::vector<long> detect_periods;
  std::vector<double> tau_hats;
  std::vector<long> curve_t;      // downsampled cumulative-regret curve
  std::vector<double> curve_cum;
  long explored = 0, exploited = 0;
};

// Build the policy, run one seeded episode, and distill the trace. The run
// seed is derived from (base_seed, policy, T, run_id) so any single run is
// reproducible in isolation and execution order is irrelevant.
EpisodeSummary run_one(const std::string& policy_name, const Environment& env,
                       const PolicyConfig& cfg, uint64_t base_seed, int run_id,
                       int curve_points = 0);

}  // namespace pricing
