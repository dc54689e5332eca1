#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "pricing/glm.hpp"
#include "pricing/market.hpp"
#include "pricing/policy.hpp"
#include "pricing/rng.hpp"

using namespace pricing;

namespace {

PolicyConfig small_cfg(long T, int d, int m, double lambda = 0.1) {
  PolicyConfig cfg;
  cfg.T = T;
  cfg.d = d;
  cfg.m = m;
  cfg.gamma = double(m);
  cfg.lambda = lambda;
  cfg.experiment_set = {1.0, 15.0, {}};
  cfg.p_lo = 0.0;
  cfg.p_hi = 50.0;
  return cfg;
}

Environment gaussian_env(long T, const Vector& theta) {
  Environment env;
  env.family = Family::Gaussian;
  env.T = T;
  env.d = int(theta.size());
  env.segments.push_back({1, theta, {}});
  return env;
}

// manual episode: returns the posted prices so structure is observable
std::vector<double> drive(Policy& pol, const Environment& env, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> prices;
  Vector z;
  for (long t = 1; t <= env.T; ++t) {
    env.draw_z(t, rng, z);
    double p = pol.next_price(z, t, rng);
    prices.push_back(p);
    pol.observe(sample_demand(env.family, env.theta_at(t), z, p, rng));
  }
  return prices;
}

const char* kPolicyNames[] = {"CPDP",  "Naive-DP", "SW-DP",
                              "DF-DP", "BK-DP",    "OPT-DP"};

}  // namespace

TEST_CASE("every period is exactly one of explore/exploit across 100 random "
          "configurations") {
  Rng meta(600);
  Vector theta(3);
  theta << 1.0, 0.4, -0.35;
  int checked = 0;
  while (checked < 100) {
    long T = 60 + long(meta.uniform() * 240);
    int m = 1 + int(meta.uniform() * 4);
    PolicyConfig cfg = small_cfg(T, 3, m);
    cfg.eta_sw = meta.uniform() < 0.5 ? 2.0 + meta.uniform() * 6
                                      : std::numeric_limits<double>::infinity();
    cfg.rho_df = 0.9 + meta.uniform() * 0.1;
    if (meta.uniform() < 0.3)
      cfg.experiment_set = {0.0, 0.0, {2.0, 5.0, 9.0, 14.0}};
    cfg.true_taus = {T / 3, 2 * T / 3};

    Environment env = gaussian_env(T, theta);
    for (const char* name : kPolicyNames) {
      auto pol = make_policy(name, env.family, cfg);
      drive(*pol, env, 7000 + uint64_t(checked));
      REQUIRE(pol->explored() + pol->exploited() == T);
      ++checked;
      if (checked == 100) break;
    }
  }
}

TEST_CASE("posted prices always respect the bounds") {
  Vector theta(3);
  theta << 0.5, 1.0, -0.4;
  Environment env;
  env.family = Family::Logistic;
  env.T = 200;
  env.d = 3;
  env.segments.push_back({1, theta, {}});

  PolicyConfig cfg = small_cfg(200, 3, 4);
  cfg.p_lo = 2.0;
  cfg.p_hi = 10.0;
  cfg.experiment_set = {3.0, 8.0, {}};
  for (const char* name : kPolicyNames) {
    PolicyConfig c = cfg;
    c.true_taus = {100};
    auto pol = make_policy(name, env.family, c);
    for (double p : drive(*pol, env, 42)) {
      REQUIRE(p >= 2.0);
      REQUIRE(p <= 10.0);
    }
  }
}

TEST_CASE("finite experiment sets only post listed prices during exploration") {
  Vector theta(2);
  theta << 8.0, -0.5;
  Environment env = gaussian_env(60, theta);
  PolicyConfig cfg = small_cfg(60, 2, 3);
  cfg.experiment_set = {0.0, 0.0, {2.0, 7.0, 11.0}};
  auto pol = make_policy("Naive-DP", env.family, cfg);
  auto prices = drive(*pol, env, 5);
  // first exploration block is periods 1..3
  for (int t = 0; t < 3; ++t) {
    bool listed = prices[size_t(t)] == 2.0 || prices[size_t(t)] == 7.0 ||
                  prices[size_t(t)] == 11.0;
    REQUIRE(listed);
  }
}

TEST_CASE("the no-detection cycle structure follows the block arithmetic") {
  // T=100, m=3, n_0 = ceil(sqrt(100)) = 10, cycle length 13
  Vector theta(3);
  theta << 1.0, 0.5, -0.3;
  Environment env = gaussian_env(100, theta);
  PolicyConfig cfg = small_cfg(100, 3, 3);
  auto pol = make_policy("Naive-DP", env.family, cfg);
  drive(*pol, env, 11);

  CHECK(pol->explored() == 24);  // 8 full exploration blocks
  CHECK(pol->exploited() == 76);
  std::vector<long> refits;
  for (const auto& ev : pol->events())
    if (ev.kind == "refit") refits.push_back(ev.period);
  std::vector<long> want{3, 16, 29, 42, 55, 68, 81, 94};
  CHECK(refits == want);
  auto* cycle = dynamic_cast<CyclePolicy*>(pol.get());
  REQUIRE(cycle != nullptr);
  CHECK(cycle->exploit_len() == 10);
  CHECK(cycle->detections() == 0);
}

TEST_CASE("SW with an infinite window and DF with no discount reproduce the "
          "plain policy bit-for-bit") {
  Vector a(4), b(4);
  a << 0.5, 1.0, 0.5, -0.3;
  b << 0.2, 0.4, 0.2, -0.6;
  Environment env;
  env.family = Family::Logistic;
  env.T = 260;
  env.d = 4;
  env.segments.push_back({1, a, {}});
  env.segments.push_back({131, b, {}});

  PolicyConfig cfg = small_cfg(260, 4, 4);
  cfg.eta_sw = std::numeric_limits<double>::infinity();
  cfg.rho_df = 1.0;

  auto naive = make_policy("Naive-DP", env.family, cfg);
  auto sw = make_policy("SW-DP", env.family, cfg);
  auto df = make_policy("DF-DP", env.family, cfg);
  auto p0 = drive(*naive, env, 99);
  auto p1 = drive(*sw, env, 99);
  auto p2 = drive(*df, env, 99);
  REQUIRE(p0.size() == p1.size());
  CHECK(std::memcmp(p0.data(), p1.data(), p0.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(p0.data(), p2.data(), p0.size() * sizeof(double)) == 0);
}

TEST_CASE("a finite window eventually forgets and the trajectory diverges "
          "from the plain policy exactly when truncation starts") {
  Vector theta(3);
  theta << 1.0, 0.5, -0.35;
  Environment env = gaussian_env(150, theta);
  // m=3, n_0=13, cycle 16; eta_sw=2 -> keep 6 rows, first binding refit is
  // the third one (9 rows accumulated), at period 2*16 + 3 = 35
  PolicyConfig cfg = small_cfg(150, 3, 3);
  cfg.eta_sw = 2.0;
  auto naive = make_policy("Naive-DP", env.family, cfg);
  auto sw = make_policy("SW-DP", env.family, cfg);
  auto p0 = drive(*naive, env, 17);
  auto p1 = drive(*sw, env, 17);
  for (size_t t = 0; t < 35; ++t) REQUIRE(p0[t] == p1[t]);
  bool diverged = false;
  for (size_t t = 35; t < p0.size(); ++t) diverged |= (p0[t] != p1[t]);
  CHECK(diverged);
}

TEST_CASE("discounting reweights but keeps every observation") {
  Vector theta(3);
  theta << 1.0, 0.5, -0.35;
  Environment env = gaussian_env(120, theta);
  PolicyConfig cfg = small_cfg(120, 3, 3);
  cfg.rho_df = 0.9;
  auto naive = make_policy("Naive-DP", env.family, cfg);
  auto df = make_policy("DF-DP", env.family, cfg);
  auto p0 = drive(*naive, env, 23);
  auto p1 = drive(*df, env, 23);
  // identical through the first exploration block plus the first exploit
  // price (the first fit weighs a single block almost uniformly but not
  // exactly; divergence must appear once fits differ)
  bool diverged = false;
  for (size_t t = 3; t < p0.size(); ++t) diverged |= (p0[t] != p1[t]);
  CHECK(diverged);
  CHECK(naive->explored() == df->explored());
}

TEST_CASE("the oracle policy restarts exactly at true change-points, "
          "mid-cycle included") {
  // T=20, m=5, n_0=5; tau=8 fires inside the first exploit block
  Vector a(2), b(2);
  a << 8.0, -0.5;
  b << 2.0, -1.5;
  Environment env;
  env.family = Family::Gaussian;
  env.T = 20;
  env.d = 2;
  env.segments.push_back({1, a, {}});
  env.segments.push_back({9, b, {}});

  PolicyConfig cfg = small_cfg(20, 2, 5);
  cfg.true_taus = {8};
  auto pol = make_policy("OPT-DP", env.family, cfg);
  drive(*pol, env, 3);

  std::vector<long> detects;
  for (const auto& ev : pol->events())
    if (ev.kind == "detect") detects.push_back(ev.period);
  REQUIRE(detects == std::vector<long>{9});
  // explore 1-5, exploit 6-8 (cut), explore 9-13, exploit 14-17 (n_1=4),
  // explore 18-20 truncated by the horizon
  CHECK(pol->explored() == 13);
  CHECK(pol->exploited() == 7);
  auto* cycle = dynamic_cast<CyclePolicy*>(pol.get());
  REQUIRE(cycle != nullptr);
  CHECK(cycle->detections() == 1);
  CHECK(cycle->exploit_len() == 4);  // ceil(sqrt(20/2))
}

TEST_CASE("oracle restarts shrink the exploitation budget on the published "
          "schedule") {
  Vector theta(2);
  theta << 5.0, -0.5;
  Environment env = gaussian_env(40, theta);
  // oracle taus need not coincide with real changes for the bookkeeping
  PolicyConfig cfg = small_cfg(40, 2, 2);
  cfg.T = 50000;  // budget horizon drives n_k
  cfg.true_taus = {10, 20, 30};
  auto pol = make_policy("OPT-DP", env.family, cfg);
  auto* cycle = dynamic_cast<CyclePolicy*>(pol.get());
  REQUIRE(cycle != nullptr);

  Rng rng(9);
  Vector z;
  std::vector<long> lens;
  for (long t = 1; t <= 40; ++t) {
    env.draw_z(t, rng, z);
    double p = cycle->next_price(z, t, rng);
    cycle->observe(sample_demand(env.family, env.theta_at(t), z, p, rng));
    if (t == 5 || t == 15 || t == 25 || t == 35)
      lens.push_back(cycle->exploit_len());
  }
  // n_k = ceil(sqrt(50000/(k+1))) for k = 0,1,2,3
  CHECK(lens == std::vector<long>{224, 159, 130, 112});
  CHECK(cycle->detections() == 3);
  // exploration accelerates: the exploit block strictly shrinks
  for (size_t i = 1; i < lens.size(); ++i) REQUIRE(lens[i] < lens[i - 1]);
}

TEST_CASE("a stationary oracle is the plain policy bit-for-bit") {
  Vector theta(3);
  theta << 1.0, 0.6, -0.4;
  Environment env = gaussian_env(140, theta);
  PolicyConfig cfg = small_cfg(140, 3, 3);
  auto naive = make_policy("Naive-DP", env.family, cfg);
  cfg.true_taus = {};
  auto opt = make_policy("OPT-DP", env.family, cfg);
  auto p0 = drive(*naive, env, 31);
  auto p1 = drive(*opt, env, 31);
  CHECK(std::memcmp(p0.data(), p1.data(), p0.size() * sizeof(double)) == 0);
}

TEST_CASE("prices are non-anticipating: the future cannot leak backwards") {
  Vector a(3), b(3);
  a << 0.5, 1.0, -0.4;
  b << 0.1, 0.2, -0.9;
  Environment stat = gaussian_env(120, a);
  Environment shift;
  shift.family = Family::Gaussian;
  shift.T = 120;
  shift.d = 3;
  shift.segments.push_back({1, a, {}});
  shift.segments.push_back({62, b, {}});

  for (const char* name : {"CPDP", "Naive-DP", "BK-DP"}) {
    PolicyConfig cfg = small_cfg(120, 3, 5);
    auto p_stat = make_policy(name, Family::Gaussian, cfg);
    auto p_shift = make_policy(name, Family::Gaussian, cfg);
    auto v0 = drive(*p_stat, stat, 77);
    auto v1 = drive(*p_shift, shift, 77);
    // identical through period 62: the first 61 observations match and the
    // price at 62 is chosen before y_62 is revealed
    for (size_t t = 0; t < 62; ++t) REQUIRE(v0[t] == v1[t]);
  }
}

TEST_CASE("experiment schedule of the square-number policy") {
  // m=2: blocks {1,2}, {4,5}, {9,10}, {16,17}, ...
  std::vector<long> want{1, 2, 4, 5, 9, 10, 16, 17};
  std::vector<long> got;
  for (long t = 1; t <= 20; ++t)
    if (BkPolicy::is_experiment(t, 2)) got.push_back(t);
  CHECK(got == want);

  // overlapping blocks merge: m=5 covers [1,5] via L=1,2 and [9,13] via L=3
  std::vector<long> got5;
  for (long t = 1; t <= 14; ++t)
    if (BkPolicy::is_experiment(t, 5)) got5.push_back(t);
  CHECK(got5 == std::vector<long>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13});

  // the experiment count is at most m * floor(sqrt(T))
  for (long T : {50L, 200L, 1000L}) {
    for (int m : {1, 2, 3, 7}) {
      long count = 0;
      for (long t = 1; t <= T; ++t) count += BkPolicy::is_experiment(t, m);
      REQUIRE(count <= long(m) * long(std::sqrt(double(T))));
    }
  }
}

TEST_CASE("the square-number policy explores exactly its schedule and refits "
          "at the end of each maximal run") {
  Vector theta(3);
  theta << 1.0, 0.5, -0.35;
  Environment env = gaussian_env(120, theta);
  PolicyConfig cfg = small_cfg(120, 3, 3);
  auto pol = make_policy("BK-DP", env.family, cfg);
  drive(*pol, env, 13);

  long schedule = 0;
  for (long t = 1; t <= 120; ++t) schedule += BkPolicy::is_experiment(t, 3);
  CHECK(pol->explored() == schedule);
  CHECK(pol->exploited() == 120 - schedule);

  // m=3 runs: [1,3]+[4,6] merge to [1,6], then [9,11], [16,18], [25,27],
  // [36,38], [49,51], [64,66], [81,83], [100,102]
  std::vector<long> refits;
  for (const auto& ev : pol->events())
    if (ev.kind == "refit") refits.push_back(ev.period);
  std::vector<long> want{6, 11, 18, 27, 38, 51, 66, 83, 102};
  CHECK(refits == want);
}

TEST_CASE("an upward-sloping demand estimate degrades to the price cap with "
          "an event trail") {
  Vector theta(2);
  theta << 0.2, 0.8;  // demand increases with price
  Environment env = gaussian_env(40, theta);
  PolicyConfig cfg = small_cfg(40, 2, 8, 0.01);
  cfg.p_hi = 20.0;
  auto pol = make_policy("CPDP", env.family, cfg);
  auto prices = drive(*pol, env, 21);

  bool flagged = false;
  for (const auto& ev : pol->events()) flagged |= ev.kind == "degenerate_beta";
  CHECK(flagged);
  // n_0 = ceil(sqrt(40)) = 7: periods 9..15 exploit at the cap
  for (size_t t = 8; t < 15; ++t) REQUIRE(prices[t] == 20.0);
}

TEST_CASE("configuration validation rejects malformed inputs") {
  Vector theta(3);
  theta << 1.0, 0.5, -0.3;
  PolicyConfig ok = small_cfg(100, 3, 3);
  CHECK_NOTHROW(make_policy("CPDP", Family::Gaussian, ok));
  CHECK_THROWS(make_policy("no-such-policy", Family::Gaussian, ok));

  PolicyConfig bad = ok;
  bad.m = 0;
  CHECK_THROWS(make_policy("CPDP", Family::Gaussian, bad));
  bad = ok;
  bad.T = 0;
  CHECK_THROWS(make_policy("CPDP", Family::Gaussian, bad));
  bad = ok;
  bad.experiment_set = {0.0, 0.0, {7.0}};  // fewer than two levels
  CHECK_THROWS(make_policy("CPDP", Family::Gaussian, bad));
  bad = ok;
  bad.experiment_set = {1.0, 99.0, {}};  // outside the price bounds
  CHECK_THROWS(make_policy("CPDP", Family::Gaussian, bad));
  bad = ok;
  bad.rho_df = 0.0;
  CHECK_THROWS(make_policy("DF-DP", Family::Gaussian, bad));
  bad = ok;
  bad.true_taus = {50, 50};
  CHECK_THROWS(make_policy("OPT-DP", Family::Gaussian, bad));
}

TEST_CASE("a blatant mid-stream regime change is detected and the policy "
          "restarts") {
  Vector a(2), b(2);
  a << 5.0, -0.2;
  b << 0.5, -2.5;
  Environment env;
  env.family = Family::Gaussian;
  env.T = 400;
  env.d = 2;
  env.segments.push_back({1, a, {}});
  env.segments.push_back({201, b, {}});

  int detected_runs = 0;
  for (int s = 0; s < 10; ++s) {
    PolicyConfig cfg = small_cfg(400, 2, 10, 0.2);
    auto pol = make_policy("CPDP", env.family, cfg);
    drive(*pol, env, 800 + uint64_t(s));
    long first_detect = 0;
    for (const auto& ev : pol->events())
      if (ev.kind == "detect" && first_detect == 0) first_detect = ev.period;
    if (first_detect > 200) ++detected_runs;
  }
  CHECK(detected_runs >= 8);
}
