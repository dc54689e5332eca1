// dpsim: experiment harness for the piecewise-stationary pricing library.
//
// Subcommands:
//   simulate        scenario runs -> regret_curve.csv / summary.csv / events.csv
//   sweep           multi-horizon mean regret and its log-log slope
//   cv              pilot cross-validation of the Lasso tuning parameter
//   segment         offline change-point segmentation of a loan CSV
//   replay          run the policies on an environment fitted to a loan CSV
//   make-surrogate  draw a synthetic loan-application table
//   kl              Monte Carlo KL divergence between scenario parameters
//
// Every run is reseeded from (seed, policy, T, run_id), so results do not
// depend on scheduling or on which other runs share the invocation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pricing/csv.hpp"
#include "pricing/glm.hpp"
#include "pricing/lasso.hpp"
#include "pricing/market.hpp"
#include "pricing/policy.hpp"
#include "pricing/rng.hpp"
#include "pricing/segmenter.hpp"

namespace fs = std::filesystem;
using namespace pricing;

namespace {

// ---------------------------------------------------------------------------
// shared option bundles

struct Knobs {
  std::vector<std::string> policies{"CPDP"};
  int reps = 1;
  std::uint64_t seed = 1;
  std::string out = "out";
  double lambda_c = -1.0;  // <0: scenario default (0.2 synthetic, 0.02 replay)
  bool lambda_cv = false;
  int m = 0;          // 0: ceil(log(Td)^1.1)
  double gamma = 0;   // 0: equal to m
  double eta_sw = 8.0;
  double rho_df = 0.99;
  int scan_stride = 0;
  int curve_points = 2000;
};

void add_knob_flags(CLI::App* cmd, Knobs& k) {
  cmd->add_option("--policies", k.policies,
                  "policies to run (CPDP, Naive-DP, SW-DP, DF-DP, BK-DP, OPT-DP)")
      ->delimiter(',');
  cmd->add_option("--reps", k.reps, "independent replications")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", k.seed, "base seed; per-run seeds derive from it");
  cmd->add_option("--out", k.out, "output directory");
  cmd->add_option("--lambda-c", k.lambda_c,
                  "c in lambda = c*sqrt(log(T*d)); default 0.2 (0.02 on replay)");
  cmd->add_flag("--lambda-cv", k.lambda_cv,
                "select lambda by pilot cross-validation per replication");
  cmd->add_option("--m", k.m, "exploration block length (0 = rule)");
  cmd->add_option("--gamma", k.gamma, "detection threshold (0 = equal to m)");
  cmd->add_option("--eta-sw", k.eta_sw, "SW-DP window, in multiples of m");
  cmd->add_option("--rho-df", k.rho_df, "DF-DP per-period discount factor")
      ->check(CLI::Range(1e-6, 1.0));
  cmd->add_option("--scan-stride", k.scan_stride,
                  "candidate-split stride in the detection scan (0 = m)");
  cmd->add_option("--curve-points", k.curve_points,
                  "max regret-curve rows per run (0 = no curve output)");
}

void apply_knobs(PolicyConfig& cfg, const Knobs& k) {
  if (k.m > 0) {
    cfg.m = k.m;
    cfg.gamma = double(k.m);  // threshold tracks the block rule by default
  }
  if (k.gamma > 0) cfg.gamma = k.gamma;
  cfg.eta_sw = k.eta_sw;
  cfg.rho_df = k.rho_df;
  cfg.scan_stride = k.scan_stride;
}

Family parse_family(const std::string& s) {
  if (s == "gaussian") return Family::Gaussian;
  if (s == "logistic") return Family::Logistic;
  if (s == "poisson") return Family::Poisson;
  throw std::invalid_argument("unknown family: " + s);
}

// ---------------------------------------------------------------------------
// pilot cross-validation (sqrt(T) uniform price experiments on segment 1)

std::vector<double> default_c_grid() { return {0.05, 0.1, 0.2, 0.5, 1.0, 2.0}; }

Dataset draw_pilot(const Environment& env, const ExperimentSet& prices,
                   long n, Rng& rng) {
  Dataset pilot(env.d);
  Vector z(env.d - 1);
  for (long i = 1; i <= n; ++i) {
    env.draw_z(i, rng, z);
    double p = prices.draw(rng);
    double y = sample_demand(env.family, env.theta_at(i), z, p, rng);
    pilot.append(z, p, y, i);
  }
  return pilot;
}

CvResult pilot_cv(const Environment& env, const ExperimentSet& prices,
                  const std::vector<double>& c_grid, std::uint64_t seed) {
  long n = long(std::ceil(std::sqrt(double(env.T))));
  Rng rng(seed);
  Dataset pilot = draw_pilot(env, prices, n, rng);
  int folds = n <= 200 ? int(n) : 10;
  return cross_validate_lambda(env.family, pilot.view(), c_grid, folds, env.T,
                               env.d);
}

// ---------------------------------------------------------------------------
// run grid + CSV emission

struct GridResult {
  std::vector<EpisodeSummary> runs;
  std::vector<long> true_taus;  // of the (single) environment family
};

// Runs reps x policies on one environment. Replications fan out to the
// OpenMP pool; each run derives its own seed, so scheduling cannot matter.
std::vector<EpisodeSummary> run_grid(const Environment& env,
                                     const PolicyConfig& base_cfg,
                                     const Knobs& k, int curve_points) {
  struct Job {
    const std::string* policy;
    int rep;
  };
  std::vector<Job> jobs;
  for (const auto& pol : k.policies)
    for (int r = 0; r < k.reps; ++r) jobs.push_back({&pol, r});

  // Per-replication pilot lambda, shared by every policy in that replication.
  std::vector<double> cv_lambda(size_t(k.reps), base_cfg.lambda);
  if (k.lambda_cv) {
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < k.reps; ++r) {
      std::uint64_t s = run_seed(k.seed, "pilot", env.T, r);
      cv_lambda[size_t(r)] =
          pilot_cv(env, base_cfg.experiment_set, default_c_grid(), s).lambda;
    }
  }

  std::vector<EpisodeSummary> out(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (long j = 0; j < long(jobs.size()); ++j) {
    PolicyConfig cfg = base_cfg;
    cfg.lambda = cv_lambda[size_t(jobs[size_t(j)].rep)];
    out[size_t(j)] = run_one(*jobs[size_t(j)].policy, env, cfg, k.seed,
                             jobs[size_t(j)].rep, curve_points);
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                   : s / double(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double m = mean_of(v), s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

// Largest true change-point strictly before `period`, 0 if none.
long true_tau_before(const std::vector<long>& taus, long period) {
  long best = 0;
  for (long tau : taus)
    if (tau < period) best = std::max(best, tau);
  return best;
}

void write_curves(const fs::path& dir, const std::vector<EpisodeSummary>& runs) {
  CsvWriter w((dir / "regret_curve.csv").string(), "regret_curve/1",
              {"run_id", "policy", "T", "t", "cum_regret"});
  for (const auto& r : runs)
    for (size_t i = 0; i < r.curve_t.size(); ++i)
      w.row({std::to_string(r.run_id), r.policy, std::to_string(r.T),
             std::to_string(r.curve_t[i]), format_double(r.curve_cum[i])});
}

void write_events(const fs::path& dir, const std::vector<EpisodeSummary>& runs,
                  const std::vector<long>& true_taus) {
  CsvWriter w((dir / "events.csv").string(), "events/1",
              {"run_id", "policy", "T", "period", "tau_hat", "true_tau"});
  for (const auto& r : runs)
    for (size_t i = 0; i < r.detect_periods.size(); ++i)
      w.row({std::to_string(r.run_id), r.policy, std::to_string(r.T),
             std::to_string(r.detect_periods[i]),
             format_double(r.tau_hats[i]),
             std::to_string(true_tau_before(true_taus, r.detect_periods[i]))});
}

struct SummaryRow {
  std::string policy;
  long T;
  double mean_regret, sd, mean_k, mean_delay1;
  int n_runs;
};

std::vector<SummaryRow> summarize(const std::vector<EpisodeSummary>& runs,
                                  const std::vector<long>& true_taus) {
  std::map<std::pair<std::string, long>, std::vector<const EpisodeSummary*>>
      groups;
  for (const auto& r : runs) groups[{r.policy, r.T}].push_back(&r);

  std::vector<SummaryRow> rows;
  for (const auto& [key, members] : groups) {
    std::vector<double> regret, ks, delays;
    for (const auto* r : members) {
      regret.push_back(r->total_regret);
      ks.push_back(double(r->detections));
      if (!true_taus.empty()) {
        long tau1 = true_taus.front();
        for (long p : r->detect_periods)
          if (p > tau1) {
            delays.push_back(double(p - tau1));
            break;
          }
      }
    }
    rows.push_back({key.first, key.second, mean_of(regret), sd_of(regret),
                    mean_of(ks), mean_of(delays), int(members.size())});
  }
  return rows;
}

void write_summary(const fs::path& dir, const std::vector<SummaryRow>& rows) {
  CsvWriter w((dir / "summary.csv").string(), "summary/1",
              {"policy", "T", "mean_regret", "sd", "mean_detected_K",
               "mean_delay_tau1"});
  for (const auto& r : rows)
    w.row({r.policy, std::to_string(r.T), format_double(r.mean_regret),
           format_double(r.sd), format_double(r.mean_k),
           format_double(r.mean_delay1)});
}

void print_summary(const std::vector<SummaryRow>& rows) {
  std::cout << "policy          T       runs  mean_regret   sd        K"
               "     delay_tau1\n";
  for (const auto& r : rows) {
    std::printf("%-14s %-7ld %-5d %-12.2f %-9.2f %-5.2f %.1f\n",
                r.policy.c_str(), r.T, r.n_runs, r.mean_regret, r.sd, r.mean_k,
                r.mean_delay1);
  }
}

fs::path ensure_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// subcommand bodies

int cmd_simulate(const std::string& scenario_name, std::vector<long> horizons,
                 const Knobs& k, bool is_sweep) {
  if (horizons.empty()) throw std::invalid_argument("no horizons given");
  std::sort(horizons.begin(), horizons.end());
  if (is_sweep && horizons.size() < 2)
    throw std::invalid_argument("sweep needs at least two horizons");

  fs::path dir = ensure_dir(k.out);
  std::vector<EpisodeSummary> all;
  std::vector<long> taus;  // change-points of the largest horizon
  for (long T : horizons) {
    Environment env = scenario(scenario_name, T);
    PolicyConfig cfg = scenario_defaults(env);
    if (k.lambda_c >= 0) cfg.lambda = lambda_rule(k.lambda_c, T, env.d);
    apply_knobs(cfg, k);
    int curve = is_sweep ? 0 : std::min<long>(k.curve_points, T);
    auto runs = run_grid(env, cfg, k, int(curve));
    all.insert(all.end(), runs.begin(), runs.end());
    taus = env.change_points();
  }

  auto rows = summarize(all, taus);
  write_summary(dir, rows);
  write_events(dir, all, taus);
  if (!is_sweep && k.curve_points > 0) write_curves(dir, all);

  if (is_sweep) {
    CsvWriter w((dir / "slopes.csv").string(), "slopes/1", {"policy", "slope"});
    for (const auto& pol : k.policies) {
      std::vector<double> means, ts;
      for (const auto& r : rows)
        if (r.policy == pol) {
          means.push_back(r.mean_regret);
          ts.push_back(double(r.T));
        }
      double slope = loglog_slope(means, ts);
      w.row({pol, format_double(slope)});
      std::cout << "slope " << pol << " " << slope << "\n";
    }
  }
  print_summary(rows);
  return 0;
}

int cmd_cv(const std::string& scenario_name, long T, const Knobs& k,
           std::vector<double> c_grid) {
  if (c_grid.empty()) c_grid = default_c_grid();
  Environment env = scenario(scenario_name, T);
  PolicyConfig cfg = scenario_defaults(env);

  std::vector<CvResult> picks(size_t(k.reps));
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < k.reps; ++r) {
    std::uint64_t s = run_seed(k.seed, "pilot", T, r);
    picks[size_t(r)] = pilot_cv(env, cfg.experiment_set, c_grid, s);
  }

  fs::path dir = ensure_dir(k.out);
  CsvWriter w((dir / "cv.csv").string(), "cv/1",
              {"run_id", "c", "lambda", "degenerate"});
  std::vector<double> lambdas;
  for (int r = 0; r < k.reps; ++r) {
    const auto& p = picks[size_t(r)];
    lambdas.push_back(p.lambda);
    w.row({std::to_string(r), format_double(p.c), format_double(p.lambda),
           std::to_string(int(p.degenerate))});
  }
  std::sort(lambdas.begin(), lambdas.end());
  auto q = [&](double f) {
    return lambdas[size_t(f * double(lambdas.size() - 1))];
  };
  std::cout << "lambda_cv quantiles (min/25/50/75/max): " << q(0) << " "
            << q(0.25) << " " << q(0.5) << " " << q(0.75) << " " << q(1)
            << "\n";
  std::cout << "lambda_fix(0.2) = " << lambda_rule(0.2, T, env.d) << "\n";
  return 0;
}

int cmd_segment(const std::string& csv, const Knobs& k, BicOptions opts,
                const std::string& family_name) {
  LoanTable table = read_loan_csv(csv);
  Dataset data = table.to_dataset();
  Family fam = parse_family(family_name);
  SegmentationResult res = bic_segment(fam, data.view(), opts);

  fs::path dir = ensure_dir(k.out);
  std::vector<std::string> cols{"segment", "start", "end", "intercept"};
  for (const auto& n : table.cov_names) cols.push_back(n);
  cols.push_back("price");
  CsvWriter w((dir / "segments.csv").string(), "segments/1", cols);

  long n = table.n();
  for (size_t s = 0; s <= res.tau_hat.size(); ++s) {
    long start = s == 0 ? 1 : res.tau_hat[s - 1] + 1;
    long end = s < res.tau_hat.size() ? res.tau_hat[s] : n;
    std::vector<std::string> cells{std::to_string(s + 1),
                                   std::to_string(start), std::to_string(end)};
    for (int j = 0; j < res.theta_hat[s].size(); ++j)
      cells.push_back(format_double(res.theta_hat[s][j]));
    w.row(cells);
  }

  std::cout << "detected change-points:";
  for (long tau : res.tau_hat) std::cout << " " << tau;
  std::cout << "\nobjective " << res.objective << "\n";
  return 0;
}

int cmd_replay(const std::string& csv, const Knobs& k,
               std::vector<long> taus, bool auto_segment, BicOptions opts,
               const std::string& family_name, double exp_lo, double exp_hi,
               double p_lo, double p_hi) {
  if (k.policies.empty()) throw std::invalid_argument("empty policy list");
  LoanTable table = read_loan_csv(csv);
  Dataset data = table.to_dataset();
  Family fam = parse_family(family_name);

  if (auto_segment) {
    taus = bic_segment(fam, data.view(), opts).tau_hat;
    std::cout << "segmentation:";
    for (long tau : taus) std::cout << " " << tau;
    std::cout << "\n";
  }
  Environment env = replay_environment(fam, data.view(), taus, p_lo, p_hi);

  PolicyConfig cfg;
  cfg.T = env.T;
  cfg.d = env.d;
  cfg.m = experiment_block_rule(env.T, env.d);
  cfg.gamma = double(cfg.m);
  cfg.lambda = lambda_rule(k.lambda_c >= 0 ? k.lambda_c : 0.02, env.T, env.d);
  cfg.experiment_set = {exp_lo, exp_hi, {}};
  cfg.p_lo = p_lo;
  cfg.p_hi = p_hi;
  cfg.true_taus = env.change_points();
  apply_knobs(cfg, k);

  fs::path dir = ensure_dir(k.out);
  auto runs = run_grid(env, cfg, k, std::min<long>(k.curve_points, env.T));
  auto rows = summarize(runs, env.change_points());
  write_summary(dir, rows);
  write_events(dir, runs, env.change_points());
  if (k.curve_points > 0) write_curves(dir, runs);
  print_summary(rows);
  return 0;
}

int cmd_make_surrogate(long T, std::uint64_t seed, const std::string& out,
                       bool npv) {
  LoanTable table = surrogate_table(T, seed);
  if (fs::path(out).has_parent_path())
    fs::create_directories(fs::path(out).parent_path());
  write_loan_csv(out, table, npv);
  Environment env = surrogate_truth(T);
  std::cout << "wrote " << out << " (" << T << " rows); true change-points:";
  for (long tau : env.change_points()) std::cout << " " << tau;
  std::cout << "\n";
  return 0;
}

int cmd_kl(const std::string& from, const std::string& to, long samples,
           double p_lo, double p_hi, std::uint64_t seed) {
  Vector a = scenario_theta(from), b = scenario_theta(to);
  Rng rng(seed);
  KlEstimate kl =
      kl_divergence_mc(Family::Logistic, a, b, p_lo, p_hi, samples, rng);
  std::cout << "KL(" << from << ", " << to << ") = " << kl.value << " +/- "
            << kl.std_error << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"piecewise-stationary dynamic pricing experiment harness"};
  app.require_subcommand(1);
  app.set_config("--config")->configurable(false);
  app.allow_config_extras(false);

  // simulate / sweep
  Knobs sim_k;
  std::string sim_scenario = "S3";
  std::vector<long> sim_T{20000};
  auto* sim = app.add_subcommand("simulate", "run scenario replications");
  sim->add_option("--scenario", sim_scenario,
                  "S1 S2 S3 S2star S3star S4 S4small A-S4 A-S5 A-S6");
  sim->add_option("--T", sim_T, "horizon(s)")->delimiter(',');
  add_knob_flags(sim, sim_k);

  Knobs sweep_k;
  std::string sweep_scenario = "S1";
  std::vector<long> sweep_T{2000, 5000, 10000, 20000};
  auto* sweep = app.add_subcommand("sweep", "mean regret vs horizon + slope");
  sweep->add_option("--scenario", sweep_scenario, "scenario name");
  sweep->add_option("--T", sweep_T, "ascending horizons")->delimiter(',');
  add_knob_flags(sweep, sweep_k);

  // cv
  Knobs cv_k;
  std::string cv_scenario = "S1";
  long cv_T = 10000;
  std::vector<double> cv_grid;
  auto* cv = app.add_subcommand("cv", "pilot lambda cross-validation");
  cv->add_option("--scenario", cv_scenario, "scenario name");
  cv->add_option("--T", cv_T, "horizon (pilot size is ceil(sqrt(T)))");
  cv->add_option("--grid", cv_grid, "candidate c values")->delimiter(',');
  add_knob_flags(cv, cv_k);

  // segment
  Knobs seg_k;
  std::string seg_csv, seg_family = "logistic";
  BicOptions seg_opts;
  auto* seg = app.add_subcommand("segment", "offline BIC segmentation");
  seg->add_option("--csv", seg_csv, "loan-application CSV")->required();
  seg->add_option("--family", seg_family, "gaussian|logistic|poisson");
  seg->add_option("--min-seg", seg_opts.min_seg, "minimum segment length");
  seg->add_option("--max-K", seg_opts.max_K, "max change-points");
  seg->add_option("--stride", seg_opts.stride, "candidate boundary stride");
  seg->add_option("--penalty-mult", seg_opts.penalty_mult,
                  "scale on the model-size penalty");
  add_knob_flags(seg, seg_k);

  // replay
  Knobs rep_k;
  std::string rep_csv, rep_family = "logistic";
  std::vector<long> rep_taus;
  BicOptions rep_opts;
  double rep_exp_lo = 0.2, rep_exp_hi = 6.0, rep_plo = 0.0, rep_phi = 14.0;
  auto* rep = app.add_subcommand("replay", "policies on a fitted environment");
  rep->add_option("--csv", rep_csv, "loan-application CSV")->required();
  rep->add_option("--family", rep_family, "gaussian|logistic|poisson");
  rep->add_option("--taus", rep_taus,
                  "ground-truth change-points (omit to auto-segment)")
      ->delimiter(',');
  rep->add_option("--stride", rep_opts.stride, "segmentation stride");
  rep->add_option("--min-seg", rep_opts.min_seg, "segmentation min length");
  rep->add_option("--max-K", rep_opts.max_K, "segmentation max change-points");
  rep->add_option("--exp-lo", rep_exp_lo, "experiment price lower end");
  rep->add_option("--exp-hi", rep_exp_hi, "experiment price upper end");
  rep->add_option("--p-lo", rep_plo, "price lower bound");
  rep->add_option("--p-hi", rep_phi, "price upper bound");
  add_knob_flags(rep, rep_k);

  // make-surrogate
  long sur_T = 20000;
  std::uint64_t sur_seed = 7;
  std::string sur_out = "loans.csv";
  bool sur_npv = false;
  auto* sur = app.add_subcommand("make-surrogate",
                                 "draw a synthetic loan-application table");
  sur->add_option("--T", sur_T, "rows");
  sur->add_option("--seed", sur_seed, "rng seed");
  sur->add_option("--out", sur_out, "output CSV path");
  sur->add_flag("--npv", sur_npv,
                "emit monthly_payment/term/amount instead of a price column");

  // kl
  std::string kl_from = "theta1", kl_to = "theta2";
  long kl_samples = 1000000;
  double kl_plo = 1.0, kl_phi = 15.0;
  std::uint64_t kl_seed = 1;
  auto* kl = app.add_subcommand("kl", "Monte Carlo KL divergence");
  kl->add_option("--from", kl_from, "theta1 theta2 theta2star theta3 theta4");
  kl->add_option("--to", kl_to, "as --from");
  kl->add_option("--samples", kl_samples, "Monte Carlo draws");
  kl->add_option("--p-lo", kl_plo, "price range lower end");
  kl->add_option("--p-hi", kl_phi, "price range upper end");
  kl->add_option("--seed", kl_seed, "rng seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_scenario, sim_T, sim_k, false);
    if (sweep->parsed())
      return cmd_simulate(sweep_scenario, sweep_T, sweep_k, true);
    if (cv->parsed()) return cmd_cv(cv_scenario, cv_T, cv_k, cv_grid);
    if (seg->parsed()) return cmd_segment(seg_csv, seg_k, seg_opts, seg_family);
    if (rep->parsed())
      return cmd_replay(rep_csv, rep_k, rep_taus, rep_taus.empty(), rep_opts,
                        rep_family, rep_exp_lo, rep_exp_hi, rep_plo, rep_phi);
    if (sur->parsed()) return cmd_make_surrogate(sur_T, sur_seed, sur_out, sur_npv);
    if (kl->parsed())
      return cmd_kl(kl_from, kl_to, kl_samples, kl_plo, kl_phi, kl_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
