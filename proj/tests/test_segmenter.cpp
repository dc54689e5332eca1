#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "pricing/dataset.hpp"
#include "pricing/glm.hpp"
#include "pricing/kernels.hpp"
#include "pricing/market.hpp"
#include "pricing/rng.hpp"
#include "pricing/segmenter.hpp"

using namespace pricing;

namespace {

// rows [0, n) with parameter switches at the given row boundaries
Dataset sample_stream(Family fam, const std::vector<Vector>& thetas,
                      const std::vector<long>& switches, long n, Rng& rng,
                      double p_lo = 1.0, double p_hi = 15.0) {
  int d = int(thetas[0].size());
  Dataset ds(d);
  Vector z(d - 1);
  for (long i = 0; i < n; ++i) {
    z[0] = 1.0;
    for (int j = 1; j < d - 1; ++j) z[j] = rng.uniform();
    double p = rng.uniform(p_lo, p_hi);
    size_t seg = 0;
    while (seg < switches.size() && i >= switches[seg]) ++seg;
    double y = sample_demand(fam, thetas[seg], z, p, rng);
    ds.append(z, p, y, i + 1);
  }
  return ds;
}

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("dynamic program matches the brute-force reference on small "
          "problems") {
  Rng rng(900);
  for (int fix = 0; fix < 12; ++fix) {
    Family fam = fix % 2 == 0 ? Family::Gaussian : Family::Logistic;
    long n = fam == Family::Gaussian ? 160 + long(rng.uniform() * 80)
                                     : 100 + long(rng.uniform() * 50);
    int changes = fix % 3;  // 0, 1 or 2 true switches
    std::vector<Vector> thetas{vec3(1.0, 0.5, -0.3), vec3(3.0, 1.5, -0.8),
                               vec3(0.5, 0.2, -0.15)};
    if (fam == Family::Logistic)
      thetas = {vec3(0.5, 1.0, -0.4), vec3(2.0, -1.0, -0.9),
                vec3(-0.5, 0.5, -0.1)};
    std::vector<long> switches;
    for (int c = 1; c <= changes; ++c) switches.push_back(n * c / (changes + 1));

    Dataset ds = sample_stream(fam, thetas, switches, n, rng);
    BicOptions opts;
    opts.min_seg = 15;
    opts.max_K = 2;
    opts.stride = fam == Family::Gaussian ? 5 : 10;

    auto dp = bic_segment(fam, ds.view(), opts);
    auto en = bic_enumerate(fam, ds.view(), opts);
    REQUIRE(dp.tau_hat == en.tau_hat);
    REQUIRE(dp.objective == en.objective);  // same fits, same summation order
  }
}

TEST_CASE("homogeneous data yields no change-points") {
  Rng rng(901);
  Dataset g = sample_stream(Family::Gaussian, {vec3(1.0, 0.5, -0.3)}, {}, 2000,
                            rng);
  BicOptions opts;
  opts.stride = 50;
  opts.max_K = 4;
  CHECK(bic_segment(Family::Gaussian, g.view(), opts).K() == 0);

  Dataset l = sample_stream(Family::Logistic, {vec3(0.5, 1.0, -0.4)}, {}, 500,
                            rng);
  opts.stride = 25;
  CHECK(bic_segment(Family::Logistic, l.view(), opts).K() == 0);
}

TEST_CASE("a high-dimensional single shift is located on the candidate grid") {
  // 10 replications; the switch is large (both slope pairs and the price
  // sensitivity move), so recovery should be near-certain
  std::vector<Vector> thetas{scenario_theta("theta1"), scenario_theta("theta2")};
  int hits = 0;
  for (int s = 0; s < 10; ++s) {
    Rng rng(910 + uint64_t(s));
    Dataset ds =
        sample_stream(Family::Logistic, thetas, {1500}, 3000, rng);
    BicOptions opts;
    opts.stride = 100;
    opts.max_K = 2;
    auto res = bic_segment(Family::Logistic, ds.view(), opts);
    long miss = res.K() == 1 ? res.tau_hat[0] - 1500 : 99999;
    if (miss >= -100 && miss <= 100) ++hits;
  }
  CHECK(hits >= 9);
}

TEST_CASE("a stiffer penalty never adds change-points") {
  Rng rng(902);
  std::vector<Vector> thetas{vec3(1.0, 0.5, -0.3), vec3(4.0, 2.0, -1.0),
                             vec3(1.0, 0.5, -0.3)};
  Dataset ds = sample_stream(Family::Gaussian, thetas, {200, 400}, 600, rng);

  std::vector<int> ks;
  for (double mult : {1.0, 10.0, 100.0}) {
    BicOptions opts;
    opts.stride = 20;
    opts.max_K = 4;
    opts.penalty_mult = mult;
    ks.push_back(bic_segment(Family::Gaussian, ds.view(), opts).K());
  }
  CHECK(ks[0] >= ks[1]);
  CHECK(ks[1] >= ks[2]);
  CHECK(ks[0] == 2);  // the true design at the default penalty
}

TEST_CASE("minimum segment length is honoured at every boundary") {
  Rng rng(903);
  std::vector<Vector> thetas{vec3(1.0, 0.5, -0.3), vec3(4.0, 2.0, -1.0)};
  Dataset ds = sample_stream(Family::Gaussian, thetas, {310}, 600, rng);
  BicOptions opts;
  opts.stride = 20;
  opts.min_seg = 40;
  opts.max_K = 4;
  auto res = bic_segment(Family::Gaussian, ds.view(), opts);
  std::vector<long> bounds{0};
  for (long t : res.tau_hat) bounds.push_back(t);
  bounds.push_back(600);
  for (size_t i = 1; i < bounds.size(); ++i)
    REQUIRE(bounds[i] - bounds[i - 1] >= 40);
  CHECK(res.theta_hat.size() == size_t(res.K() + 1));
}

TEST_CASE("segmentation is deterministic") {
  Rng rng(904);
  std::vector<Vector> thetas{vec3(1.0, 0.5, -0.3), vec3(3.0, 1.5, -0.8)};
  Dataset ds = sample_stream(Family::Gaussian, thetas, {150}, 300, rng);
  BicOptions opts;
  opts.stride = 10;
  auto a = bic_segment(Family::Gaussian, ds.view(), opts);
  auto b = bic_segment(Family::Gaussian, ds.view(), opts);
  CHECK(a.tau_hat == b.tau_hat);
  CHECK(a.objective == b.objective);
}

TEST_CASE("preconditions are enforced") {
  Rng rng(905);
  Dataset ds = sample_stream(Family::Gaussian, {vec3(1.0, 0.5, -0.3)}, {}, 50,
                             rng);
  BicOptions opts;
  opts.min_seg = 30;
  CHECK_THROWS(bic_segment(Family::Gaussian, ds.view(), opts));  // 50 < 60
  opts.min_seg = 10;
  opts.stride = 0;
  CHECK_THROWS(bic_segment(Family::Gaussian, ds.view(), opts));
  opts.stride = 5;
  opts.max_K = -1;
  CHECK_THROWS(bic_segment(Family::Gaussian, ds.view(), opts));
  opts.max_K = 3;
  CHECK_THROWS(bic_enumerate(Family::Gaussian, ds.view(), opts));
}

TEST_CASE("replay environments pin the history: covariates verbatim, "
          "segment parameters at the slice optima") {
  Rng rng(906);
  std::vector<Vector> thetas{vec3(1.0, 0.5, -0.3), vec3(3.0, 1.5, -0.8)};
  Dataset ds = sample_stream(Family::Gaussian, thetas, {120}, 240, rng);
  auto env = replay_environment(Family::Gaussian, ds.view(), {120}, 0.0, 50.0);

  CHECK(env.T == 240);
  CHECK(env.d == 3);
  CHECK(env.change_points() == std::vector<long>{120});
  REQUIRE(env.replay_z.has_value());
  CHECK(env.replay_z->rows() == 240);
  CHECK(env.replay_z->cols() == 2);

  // the replayed covariates are the historical ones, in order
  Vector z;
  auto X = ds.view().Xm();
  for (long t = 1; t <= 240; ++t) {
    env.draw_z(t, rng, z);
    REQUIRE(z.size() == 2);
    REQUIRE(z[0] == X(t - 1, 0));
    REQUIRE(z[1] == X(t - 1, 1));
  }

  // each segment parameter is a stationary point of its slice likelihood
  std::vector<std::pair<long, long>> slices{{0, 120}, {120, 240}};
  for (size_t k = 0; k < slices.size(); ++k) {
    auto view = ds.view(slices[k].first, slices[k].second);
    Vector grad;
    nll_grad(Family::Gaussian, view, env.segments[k].theta, grad);
    REQUIRE(grad.cwiseAbs().maxCoeff() <= 1e-5 * (1.0 + double(view.n)));
  }

  // no change-points means a stationary replay
  auto flat = replay_environment(Family::Gaussian, ds.view(), {}, 0.0, 50.0);
  CHECK(flat.upsilon() == 0);

  CHECK_THROWS(replay_environment(Family::Gaussian, ds.view(), {0}, 0.0, 50.0));
  CHECK_THROWS(
      replay_environment(Family::Gaussian, ds.view(), {240}, 0.0, 50.0));
  CHECK_THROWS(
      replay_environment(Family::Gaussian, ds.view(), {50, 50}, 0.0, 50.0));
}

TEST_CASE("the surrogate loan environment has the documented shape") {
  auto env = surrogate_truth(20000);
  CHECK(env.family == Family::Logistic);
  CHECK(env.d == 7);
  CHECK(env.T == 20000);
  CHECK(env.p_lo == 0.0);
  CHECK(env.p_hi == 14.0);
  CHECK(env.upsilon() == 3);
  CHECK(env.change_points() == std::vector<long>{5000, 10000, 15000});

  // competitor-rate law shifts down after the first segment
  REQUIRE(env.segments[0].law.has_value());
  CHECK(env.segments[0].law->lo[2] == 8.5);
  CHECK(env.segments[0].law->hi[2] == 9.5);
  CHECK(env.segments[1].law->lo[2] == 5.5);
  // FICO and term ranges are common to all segments
  for (const auto& seg : env.segments) {
    CHECK(seg.law->lo[1] == 640.0);
    CHECK(seg.law->hi[1] == 740.0);
    CHECK(seg.law->lo[5] == 36.0);
    CHECK(seg.law->hi[5] == 72.0);
  }

  CHECK_THROWS(surrogate_truth(20001));
  CHECK_THROWS(surrogate_truth(2));
}

TEST_CASE("surrogate tables are reproducible draws from the surrogate truth") {
  auto a = surrogate_table(400, 7);
  auto b = surrogate_table(400, 7);
  auto c = surrogate_table(400, 8);
  REQUIRE(a.n() == 400);
  CHECK(a.dim() == 7);
  CHECK(a.cov_names == std::vector<std::string>{"fico", "competitor_rate",
                                                "amount", "prime_rate",
                                                "term"});
  CHECK(a.y == b.y);
  CHECK(a.price == b.price);
  CHECK(a.price != c.price);

  for (long i = 0; i < a.n(); ++i) {
    REQUIRE((a.y[size_t(i)] == 0.0 || a.y[size_t(i)] == 1.0));
    REQUIRE(a.price[size_t(i)] >= 0.2);
    REQUIRE(a.price[size_t(i)] <= 6.0);
    REQUIRE(a.Z(i, 0) >= 640.0);  // fico
    REQUIRE(a.Z(i, 0) <= 740.0);
    REQUIRE(a.Z(i, 4) >= 36.0);  // term
    REQUIRE(a.Z(i, 4) <= 72.0);
  }

  // dataset conversion: x = (1, covariates, price), periods 1..n
  Dataset ds = a.to_dataset();
  auto X = ds.view().Xm();
  REQUIRE(ds.size() == 400);
  for (long i = 0; i < 400; ++i) {
    REQUIRE(X(i, 0) == 1.0);
    for (int j = 0; j < 5; ++j) REQUIRE(X(i, j + 1) == a.Z(i, j));
    REQUIRE(X(i, 6) == a.price[size_t(i)]);
    REQUIRE(ds.view().y[i] == a.y[size_t(i)]);
    REQUIRE(ds.period(i) == i + 1);
  }
}

TEST_CASE("loan pricing equals the literal discounted payment stream") {
  struct Fixture {
    double monthly;
    int term;
    double amount;
  };
  for (const auto& f : {Fixture{0.35, 48, 12.0}, Fixture{1.2, 36, 30.0},
                        Fixture{0.05, 72, 5.0}}) {
    double npv = 0.0;
    for (int i = 1; i <= f.term; ++i)
      npv += f.monthly / std::pow(1.0012, double(i));
    double want = npv - f.amount;
    double got = loan_price(f.monthly, f.term, f.amount);
    REQUIRE(std::abs(got - want) <= 1e-10 * (1.0 + std::abs(want)));
  }
  CHECK(loan_price(0.0, 36, 10.0) == -10.0);
  CHECK_THROWS(loan_price(1.0, 0, 10.0));
}
