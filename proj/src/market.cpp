#include "pricing/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pricing/lasso.hpp"

namespace pricing {

void Environment::validate() const {
  if (T < 1 || d < 2 || segments.empty()) throw std::invalid_argument("environment");
  if (segments.front().start != 1)
    throw std::invalid_argument("first segment must start at period 1");
  for (size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].theta.size() != d)
      throw std::invalid_argument("segment parameter dimension");
    if (segments[i].law && (segments[i].law->lo.size() != d - 1 ||
                            segments[i].law->hi.size() != d - 1))
      throw std::invalid_argument("covariate law dimension");
    if (i > 0) {
      if (segments[i].start <= segments[i - 1].start)
        throw std::invalid_argument("segment starts must increase");
      if ((segments[i].theta - segments[i - 1].theta).norm() == 0.0)
        throw std::invalid_argument("consecutive segments must differ");
    }
  }
  if (replay_z && (replay_z->rows() < T || replay_z->cols() != d - 1))
    throw std::invalid_argument("replay covariate shape");
}

const Segment& Environment::segment_at(long t) const {
  size_t i = segments.size() - 1;
  while (i > 0 && segments[i].start > t) --i;
  return segments[i];
}

std::vector<long> Environment::change_points() const {
  std::vector<long> taus;
  for (size_t i = 1; i < segments.size(); ++i)
    taus.push_back(segments[i].start - 1);
  return taus;
}

void Environment::draw_z(long t, Rng& rng, Vector& out) const {
  out.resize(d - 1);
  if (replay_z) {
    out = replay_z->row(t - 1);
    return;
  }
  const Segment& seg = segment_at(t);
  if (seg.law) {
    for (int j = 0; j < d - 1; ++j) {
      double lo = seg.law->lo[j], hi = seg.law->hi[j];
      out[j] = lo == hi ? lo : rng.uniform(lo, hi);
    }
    return;
  }
  out[0] = 1.0;
  for (int j = 1; j < d - 1; ++j) out[j] = rng.uniform();
}

RegretTrace run_episode(Policy& policy, const Environment& env, Rng& rng) {
  env.validate();
  RegretTrace trace;
  trace.inst.resize(size_t(env.T));
  trace.cum.resize(size_t(env.T));

  Vector z;
  double cum = 0.0;
  for (long t = 1; t <= env.T; ++t) {
    env.draw_z(t, rng, z);
    double p = policy.next_price(z, t, rng);
    const Vector& theta = env.theta_at(t);
    double y = sample_demand(env.family, theta, z, p, rng);
    policy.observe(y);

    auto best = optimal_price(env.family, theta, z, env.p_lo, env.p_hi);
    double gap = revenue(env.family, theta, z, best.price) -
                 revenue(env.family, theta, z, p);
    trace.inst[size_t(t - 1)] = gap;
    cum += gap;
    trace.cum[size_t(t - 1)] = cum;
  }
  trace.events = policy.events();
  return trace;
}

namespace {

Vector theta1() {
  Vector v = Vector::Zero(50);
  v[1] = 1; v[2] = 1; v[3] = 2; v[4] = 2; v[49] = -0.25;
  return v;
}

Vector theta2() {
  Vector v = Vector::Zero(50);
  v[1] = 1; v[2] = 1; v[3] = 1; v[4] = 1; v[49] = -0.5;
  return v;
}

Vector theta2star() {
  Vector v = Vector::Zero(50);
  v[1] = 1.5; v[2] = 1.5; v[3] = 2; v[4] = 2; v[49] = -0.5;
  return v;
}

Environment base_env(long T) {
  Environment env;
  env.family = Family::Logistic;
  env.T = T;
  env.d = 50;
  env.p_lo = 0.0;
  env.p_hi = 50.0;
  return env;
}

// one switch at T/2, or switches at T/4, T/2, 3T/4
Environment alternating(long T, const Vector& a, const Vector& b, int pieces) {
  if (T % pieces != 0)
    throw std::invalid_argument("horizon not divisible by scenario blocks");
  Environment env = base_env(T);
  long block = T / pieces;
  for (int i = 0; i < pieces; ++i)
    env.segments.push_back({i * block + 1, (i % 2 == 0) ? a : b, {}});
  return env;
}

Environment blocks_of(long T, long width, const Vector& a, const Vector& b) {
  if (T % width != 0 || T / width < 2)
    throw std::invalid_argument("horizon must be a multiple of the block width");
  Environment env = base_env(T);
  long pieces = T / width;
  for (long i = 0; i < pieces; ++i)
    env.segments.push_back({i * width + 1, (i % 2 == 0) ? a : b, {}});
  return env;
}

}  // namespace

Environment scenario(const std::string& name, long T) {
  Environment env;
  if (name == "S1") {
    env = base_env(T);
    env.segments.push_back({1, theta1(), {}});
  } else if (name == "S2") {
    env = alternating(T, theta1(), theta2(), 2);
  } else if (name == "S3") {
    env = alternating(T, theta1(), theta2(), 4);
  } else if (name == "S2star") {
    env = alternating(T, theta1(), theta2star(), 2);
  } else if (name == "S3star") {
    env = alternating(T, theta1(), theta2star(), 4);
  } else if (name == "S4") {
    env = blocks_of(T, 10000, theta1(), theta2());
  } else if (name == "S4small") {
    env = blocks_of(T, 2500, theta1(), theta2());
  } else if (name == "A-S4") {
    env = base_env(T);
    env.segments.push_back({1, Vector(theta1() / 2), {}});
  } else if (name == "A-S5") {
    env = alternating(T, Vector(theta1() / 2), Vector(theta2() / 2), 2);
  } else if (name == "A-S6") {
    env = alternating(T, Vector(theta1() / 2), Vector(theta2() / 2), 4);
  } else {
    throw std::invalid_argument("unknown scenario: " + name);
  }
  env.validate();
  return env;
}

Vector scenario_theta(const std::string& name) {
  if (name == "theta1") return theta1();
  if (name == "theta2") return theta2();
  if (name == "theta2star") return theta2star();
  if (name == "theta3") return Vector(theta1() / 2);
  if (name == "theta4") return Vector(theta2() / 2);
  throw std::invalid_argument("unknown parameter name: " + name);
}

PolicyConfig scenario_defaults(const Environment& env) {
  PolicyConfig cfg;
  cfg.T = env.T;
  cfg.d = env.d;
  cfg.m = experiment_block_rule(env.T, env.d);
  cfg.gamma = double(cfg.m);
  cfg.lambda = lambda_rule(0.2, env.T, env.d);
  cfg.experiment_set.lo = 1.0;
  cfg.experiment_set.hi = 15.0;
  cfg.p_lo = env.p_lo;
  cfg.p_hi = env.p_hi;
  cfg.true_taus = env.change_points();
  return cfg;
}

double loglog_slope(const std::vector<double>& mean_regrets,
                    const std::vector<double>& horizons) {
  size_t n = mean_regrets.size();
  if (n != horizons.size() || n < 3) throw std::invalid_argument("need >= 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    if (mean_regrets[i] <= 0 || horizons[i] <= 0)
      throw std::invalid_argument("log-log regression needs positive values");
    double x = std::log(horizons[i]), y = std::log(mean_regrets[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  double den = sxx - sx * sx / double(n);
  if (den <= 1e-12 * std::max(sxx, 1.0))
    throw std::invalid_argument("degenerate horizon grid");
  return (sxy - sx * sy / double(n)) / den;
}

EpisodeSummary run_one(const std::string& policy_name, const Environment& env,
                       const PolicyConfig& cfg, uint64_t base_seed, int run_id,
                       int curve_points) {
  auto policy = make_policy(policy_name, env.family, cfg);
  EpisodeSummary s;
  s.policy = policy_name;
  s.T = env.T;
  s.run_id = run_id;
  s.seed = run_seed(base_seed, policy_name, env.T, run_id);
  Rng rng(s.seed);
  auto trace = run_episode(*policy, env, rng);

  s.total_regret = trace.cum.back();
  for (const auto& ev : trace.events) {
    if (ev.kind == "detect") {
      ++s.detections;
      s.detect_periods.push_back(ev.period);
      s.tau_hats.push_back(ev.value);
    }
  }
  s.explored = policy->explored();
  s.exploited = policy->exploited();

  if (curve_points > 0) {
    long stride = (env.T + curve_points - 1) / curve_points;  // ceil: caps rows
    for (long t = stride; t <= env.T; t += stride) {
      s.curve_t.push_back(t);
      s.curve_cum.push_back(trace.cum[size_t(t - 1)]);
    }
    if (s.curve_t.back() != env.T) {
      s.curve_t.push_back(env.T);
      s.curve_cum.push_back(trace.cum.back());
    }
  }
  return s;
}

}  // namespace pricing
