#include "pricing/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pricing/lasso.hpp"
#include "pricing/rng.hpp"

namespace pricing {

double loan_price(double monthly_payment, int term_months, double loan_amount,
                  double monthly_rate) {
  if (term_months < 1 || monthly_rate <= -1.0)
    throw std::invalid_argument("loan terms");
  double annuity =
      (1.0 - std::pow(1.0 + monthly_rate, -double(term_months))) / monthly_rate;
  return monthly_payment * annuity - loan_amount;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DataView slice(const DataView& data, long lo, long hi) {
  DataView s;
  s.X = data.X + size_t(lo) * data.d;
  s.y = data.y + lo;
  s.w = data.w ? data.w + lo : nullptr;
  s.n = hi - lo;
  s.d = data.d;
  return s;
}

long effective_min_seg(const BicOptions& opts, int d) {
  return opts.min_seg > 0 ? opts.min_seg : std::max(long(d) + 2, 30L);
}

// candidate boundary positions: 0, stride, 2*stride, ..., plus n
std::vector<long> candidate_grid(long n, long stride) {
  std::vector<long> c{0};
  for (long v = stride; v < n; v += stride) c.push_back(v);
  c.push_back(n);
  return c;
}

LassoConfig segment_fit_config(bool polish) {
  LassoConfig cfg;
  cfg.lambda = 0.0;
  cfg.newton_polish = polish;
  // With the Newton stage on, the proximal loop only warms up the iterate;
  // without it the loop has to converge on its own (raw covariate scales make
  // that slow, so give it the full budget).
  if (polish) cfg.max_iters = 200;
  return cfg;
}

// 2x NLL of the unpenalized fit on rows [lo, hi), +inf if the fit fails
double segment_cost(Family fam, const DataView& data, long lo, long hi,
                    bool polish, Vector* warm_io) {
  LassoConfig cfg = segment_fit_config(polish);
  const Vector* warm =
      (warm_io && warm_io->size() == data.d) ? warm_io : nullptr;
  try {
    auto fit = lasso_fit(fam, slice(data, lo, hi), cfg, warm);
    if (warm_io) *warm_io = fit.theta;
    return fit.converged ? 2.0 * fit.nll : kInf;
  } catch (const std::exception&) {
    return kInf;
  }
}

Vector segment_theta(Family fam, const DataView& data, long lo, long hi,
                     bool polish) {
  LassoConfig cfg = segment_fit_config(polish);
  return lasso_fit(fam, slice(data, lo, hi), cfg).theta;
}

struct CostTable {
  std::vector<long> cand;
  Eigen::MatrixXd cost;  // cost(a, b) over candidate indices, +inf = invalid

  CostTable(Family fam, const DataView& data, const BicOptions& opts) {
    long min_seg = effective_min_seg(opts, data.d);
    cand = candidate_grid(data.n, opts.stride);
    long G = long(cand.size());
    cost.setConstant(G, G, kInf);
    // rows are independent; within a row the interval grows so the previous
    // fit is the natural warm start
#pragma omp parallel for schedule(dynamic)
    for (long a = 0; a < G - 1; ++a) {
      Vector warm;
      for (long b = a + 1; b < G; ++b) {
        if (cand[b] - cand[a] < min_seg) continue;
        cost(a, b) = segment_cost(fam, data, cand[a], cand[b],
                                  opts.newton_polish, &warm);
      }
    }
  }
};

double bic_penalty(const DataView& data, const BicOptions& opts, int K) {
  return double(K) * double(data.d + 1) * std::log(double(data.n)) *
         opts.penalty_mult;
}

void finalize(Family fam, const DataView& data, const BicOptions& opts,
              SegmentationResult& res) {
  long prev = 0;
  std::vector<long> ends(res.tau_hat);
  ends.push_back(data.n);
  for (long e : ends) {
    res.theta_hat.push_back(
        segment_theta(fam, data, prev, e, opts.newton_polish));
    prev = e;
  }
}

void check_pre(const DataView& data, const BicOptions& opts) {
  if (opts.max_K < 0 || opts.stride < 1) throw std::invalid_argument("bic options");
  if (data.n < 2 * effective_min_seg(opts, data.d))
    throw std::invalid_argument("too few rows to segment");
}

}  // namespace

SegmentationResult bic_segment(Family family, const DataView& data,
                               const BicOptions& opts) {
  check_pre(data, opts);
  CostTable table(family, data, opts);
  const auto& cand = table.cand;
  const long G = long(cand.size());
  const int S_max = opts.max_K + 1;

  // B(s, b): best sum of segment costs covering rows [0, cand[b]) with s
  // segments; scan s ascending so ties favour fewer change-points.
  Eigen::MatrixXd B = Eigen::MatrixXd::Constant(S_max + 1, G, kInf);
  Eigen::MatrixXi parent = Eigen::MatrixXi::Constant(S_max + 1, G, -1);
  for (long b = 1; b < G; ++b) B(1, b) = table.cost(0, b);
  for (int s = 2; s <= S_max; ++s) {
    for (long b = s; b < G; ++b) {
      for (long a = s - 1; a < b; ++a) {
        if (B(s - 1, a) == kInf || table.cost(a, b) == kInf) continue;
        double v = B(s - 1, a) + table.cost(a, b);
        if (v < B(s, b)) {
          B(s, b) = v;
          parent(s, b) = int(a);
        }
      }
    }
  }

  SegmentationResult res;
  res.objective = kInf;
  int s_best = -1;
  for (int s = 1; s <= S_max; ++s) {
    if (B(s, G - 1) == kInf) continue;
    double obj = B(s, G - 1) + bic_penalty(data, opts, s - 1);
    if (obj < res.objective) {
      res.objective = obj;
      s_best = s;
    }
  }
  if (s_best < 0) throw std::runtime_error("no feasible segmentation");

  long b = G - 1;
  for (int s = s_best; s > 1; --s) {
    b = parent(s, b);
    res.tau_hat.push_back(cand[b]);
  }
  std::reverse(res.tau_hat.begin(), res.tau_hat.end());
  finalize(family, data, opts, res);
  return res;
}

SegmentationResult bic_enumerate(Family family, const DataView& data,
                                 const BicOptions& opts) {
  check_pre(data, opts);
  if (opts.max_K > 2)
    throw std::invalid_argument("enumeration reference caps K at 2");
  CostTable table(family, data, opts);
  const auto& cand = table.cand;
  const long G = long(cand.size());

  SegmentationResult res;
  res.objective = kInf;
  auto consider = [&](double cost_sum, std::vector<long> taus) {
    if (cost_sum == kInf) return;
    double obj = cost_sum + bic_penalty(data, opts, int(taus.size()));
    if (obj < res.objective) {
      res.objective = obj;
      res.tau_hat = std::move(taus);
    }
  };

  consider(table.cost(0, G - 1), {});
  if (opts.max_K >= 1)
    for (long a = 1; a < G - 1; ++a)
      consider(table.cost(0, a) + table.cost(a, G - 1), {cand[a]});
  if (opts.max_K >= 2)
    for (long a = 1; a < G - 1; ++a)
      for (long b = a + 1; b < G - 1; ++b)
        consider((table.cost(0, a) + table.cost(a, b)) + table.cost(b, G - 1),
                 {cand[a], cand[b]});

  if (res.objective == kInf) throw std::runtime_error("no feasible segmentation");
  finalize(family, data, opts, res);
  return res;
}

Environment replay_environment(Family family, const DataView& data,
                               const std::vector<long>& taus, double p_lo,
                               double p_hi) {
  for (size_t i = 0; i < taus.size(); ++i) {
    if (taus[i] < 1 || taus[i] >= data.n ||
        (i > 0 && taus[i] <= taus[i - 1]))
      throw std::invalid_argument("invalid change-points");
  }
  Environment env;
  env.family = family;
  env.T = data.n;
  env.d = data.d;
  env.p_lo = p_lo;
  env.p_hi = p_hi;

  long prev = 0;
  std::vector<long> ends(taus);
  ends.push_back(data.n);
  for (long e : ends) {
    env.segments.push_back(
        {prev + 1, segment_theta(family, data, prev, e, true), {}});
    prev = e;
  }
  env.replay_z = data.Xm().leftCols(data.d - 1);
  env.validate();
  return env;
}

Environment surrogate_truth(long T) {
  if (T < 4 || T % 4 != 0) throw std::invalid_argument("surrogate horizon");
  // x = (1, fico, competitor_rate, amount, prime_rate, term, price);
  // coefficients are per natural unit, so the per-FICO-point and per-month
  // effects are O(1e-3) and O(1e-2)
  auto make_theta = [](std::initializer_list<double> v) {
    Vector t(7);
    int i = 0;
    for (double x : v) t[i++] = x;
    return t;
  };
  std::vector<Vector> thetas = {
      make_theta({-7.63, 3.20e-3, 1.83, -0.11, -2.00, 1.47e-2, -0.42}),
      make_theta({-12.29, 0.35e-3, 2.69, -0.07, -0.63, 1.43e-2, -0.60}),
      make_theta({-12.81, -7.24e-3, 4.77, -0.02, -1.92, 2.89e-2, -1.27}),
      make_theta({-7.66, -2.37e-3, 2.77, -0.09, -1.02, 0.57e-2, -0.88}),
  };
  // competitor rates shift across segments; the remaining covariates keep a
  // common law
  std::vector<std::pair<double, double>> comp = {
      {8.5, 9.5}, {5.5, 6.5}, {5.3, 6.3}, {5.5, 6.5}};

  Environment env;
  env.family = Family::Logistic;
  env.T = T;
  env.d = 7;
  env.p_lo = 0.0;
  env.p_hi = 14.0;
  for (int i = 0; i < 4; ++i) {
    CovariateLaw law;
    law.lo = make_theta({1.0, 640, comp[i].first, 5, 4.4, 36, 0}).head(6);
    law.hi = make_theta({1.0, 740, comp[i].second, 35, 4.8, 72, 0}).head(6);
    env.segments.push_back({i * (T / 4) + 1, thetas[size_t(i)], law});
  }
  env.validate();
  return env;
}

LoanTable surrogate_table(long T, std::uint64_t seed) {
  Environment env = surrogate_truth(T);
  Rng rng(seed);
  LoanTable t;
  t.cov_names = {"fico", "competitor_rate", "amount", "prime_rate", "term"};
  t.Z.resize(T, 5);
  t.y.resize(size_t(T));
  t.price.resize(size_t(T));

  Vector z;
  for (long i = 1; i <= T; ++i) {
    env.draw_z(i, rng, z);
    double p = rng.uniform(0.2, 6.0);
    double y = sample_demand(env.family, env.theta_at(i), z, p, rng);
    t.Z.row(i - 1) = z.tail(5);
    t.price[size_t(i - 1)] = p;
    t.y[size_t(i - 1)] = y;
  }
  return t;
}

}  // namespace pricing
