// Acceptance suite: one test case per release criterion, each printing a
// single PASS/FAIL line. Tolerances are fixed here, not tuned at runtime.
// Criterion 11 needs the released leaderboard table; point
// CAPBOUND_LEADERBOARD_CSV at it to enable that case, otherwise it reports
// SKIP and the remaining criteria constitute acceptance.

#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "capbound/design.hpp"
#include "capbound/diagnostics.hpp"
#include "capbound/evaluation.hpp"
#include "capbound/rng.hpp"
#include "capbound/stats.hpp"
#include "capbound/synth.hpp"
#include "test_util.hpp"

using namespace capbound;
namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int criterion, const char* name, bool pass) {
  std::printf("[%s] criterion %02d: %s\n", pass ? "PASS" : "FAIL", criterion, name);
  std::fflush(stdout);
  CHECK_MESSAGE(pass, "criterion ", criterion, " (", name, ")");
}

FitConfig fit_cfg(std::uint64_t seed) {
  FitConfig cfg;
  cfg.optimizer.seed = seed;
  return cfg;
}

GeneratorSpec accept_spec(std::uint64_t seed, long n) {
  GeneratorSpec spec;
  spec.truth = SigmoidParams{0.08, 0.8, -22.0, 1.0};
  spec.z_lo = 18.0;
  spec.z_hi = 26.0;
  spec.n = n;
  spec.gap = GapLaw::uniform(0.03, 0.40);
  spec.exceed_prob = 0.02;
  spec.bump_max = 0.02;
  spec.seed = seed;
  return spec;
}

BinPartition even_bins(double lo, double hi, int n_bins) {
  BinPartition p;
  for (int b = 0; b <= n_bins; ++b)
    p.edges.push_back(lo + (hi - lo) * b / static_cast<double>(n_bins));
  p.counts.assign(static_cast<std::size_t>(n_bins), 1);
  return p;
}

std::vector<DesignCandidate> random_pool(Rng& rng, std::size_t n, const BinPartition& bins) {
  std::vector<DesignCandidate> pool(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.uniform(bins.edges.front(), bins.edges.back());
    pool[i] = DesignCandidate{"c" + std::to_string(i), z, rng.uniform(0.5, 8.0),
                              *bins.assign(z)};
  }
  return pool;
}

}  // namespace

TEST_CASE("criterion 01: constant-fit quantile recovery") {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<double> y(1000);
    for (auto& v : y) v = rng.uniform();
    const auto m = fit_constant(y, fit_cfg(seed));
    const double level = std::get<ConstantParams>(m.params).level;
    ok = ok && std::fabs(level - empirical_quantile(y, 0.98)) <= 0.02;
  }
  const bool in_time = seconds_since(t0) < 1.0;
  report(1, "fit_constant within 0.02 of the sort oracle, 20 seeds, <1s", ok && in_time);
}

TEST_CASE("criterion 02: smoothed gradient vs central differences") {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  const double kappas[] = {20, 50, 100, 200, 1000};
  bool ok = true;
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-2.0, 2.0);
    // Force a healthy share of draws into the overflow regime.
    const double kappa = i % 5 == 0 ? 1000.0 : kappas[rng.below(5)];
    const LossConfig c{rng.uniform(0.01, 0.99), kappa};
    const double h = 1e-6;
    const double fd = (smoothed_pinball(u + h, c) - smoothed_pinball(u - h, c)) / (2.0 * h);
    const double an = smoothed_pinball_grad(u, c);
    // Gradients are bounded by 1, so the error is scaled against
    // max(1, |.|): a pure relative test is vacuous near the gradient's zero
    // crossing where the finite difference itself carries truncation error.
    const double rel = std::fabs(fd - an) / std::max({1.0, std::fabs(an), std::fabs(fd)});
    ok = ok && rel <= 1e-6;
  }
  const bool in_time = seconds_since(t0) < 1.0;
  report(2, "gradient matches finite differences at kappa up to 1000, <1s", ok && in_time);
}

TEST_CASE("criterion 03: sigmoid boundary recovery on generator data") {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto synth = generate(accept_spec(seed, 2000));
    std::vector<double> z, y;
    synth.dataset.task_points("synthetic", z, y);
    const auto m = fit_sigmoid(z, y, fit_cfg(seed));
    double max_err = 0.0;
    for (int g = 0; g < 50; ++g) {
      const double zz = 18.0 + 8.0 * g / 49.0;
      max_err = std::max(max_err, std::fabs(m.predict(zz) - synth.quantile(zz)));
    }
    long covered = 0;
    for (std::size_t i = 0; i < z.size(); ++i) covered += y[i] <= m.predict(z[i]) ? 1 : 0;
    const double tau_hat = static_cast<double>(covered) / static_cast<double>(z.size());
    ok = ok && max_err <= 0.03 && std::fabs(tau_hat - 0.98) <= 0.015;
  }
  const bool in_time = seconds_since(t0) < 30.0;
  report(3, "max grid error <= 0.03 and |coverage - 0.98| <= 0.015, 10 seeds, <30s",
         ok && in_time);
}

TEST_CASE("criterion 04: monotonicity and range across fitted fixtures") {
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto spec = accept_spec(seed + 40, 900);
    if (seed % 2) spec.gap = GapLaw::beta();
    const auto synth = generate(spec);
    std::vector<double> z, y;
    synth.dataset.task_points("synthetic", z, y);
    const BoundaryModel models[] = {fit_sigmoid(z, y, fit_cfg(seed)),
                                    fit_ispline(z, y, 3, 3, fit_cfg(seed))};
    for (const auto& m : models) {
      double prev = -1.0;
      for (int g = 0; g <= 500; ++g) {
        const double q = m.predict(18.0 + 8.0 * g / 500.0);
        ok = ok && q >= prev && q >= 0.0 && q <= 1.0;
        prev = q;
      }
    }
  }
  report(4, "fitted sigmoid/ispline nondecreasing and inside [0,1]", ok);
}

TEST_CASE("criterion 05: ispline basis vs composite-Simpson quadrature") {
  MonotoneSplineBasis basis(18.0, 26.0, {20.5, 22.0, 24.0}, 3);
  bool ok = true;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    for (int g = 1; g <= 100; ++g) {
      const double x = 18.0 + 8.0 * g / 100.0;
      const int steps = 2000;
      const double h = (x - 18.0) / steps;
      double simpson = basis.m(j, 18.0) + basis.m(j, x);
      for (int s = 1; s < steps; ++s)
        simpson += basis.m(j, 18.0 + s * h) * (s % 2 ? 4.0 : 2.0);
      simpson *= h / 3.0;
      ok = ok && std::fabs(basis.i(j, x) - simpson) <= 1e-6;
    }
  }
  report(5, "each I_j matches Simpson quadrature of M_j to 1e-6", ok);
}

TEST_CASE("criterion 06: design algebra (Sherman-Morrison and gain identity)") {
  struct Checker : GreedyObserver {
    const std::vector<DesignCandidate>* pool = nullptr;
    const SigmoidParams* theta = nullptr;
    DesignConfig cfg;
    Mat4 a;
    std::vector<std::size_t> chosen;
    double prev_phi = 0.0;
    bool ok = true;
    Mat4 direct_inverse() const {
      Mat4 m = Mat4::identity(cfg.eta_ridge);
      for (std::size_t i : chosen) m.add_outer(boundary_jacobian((*pool)[i].z, *theta));
      return invert(m);
    }
    double phi_of(const Mat4& k) const {
      double phi = 0.0;
      for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) phi -= a(r, c) * k(c, r);
      return phi;
    }
    void on_step(const Mat4& k, std::size_t idx, double dinfo) override {
      chosen.push_back(idx);
      const Mat4 direct = direct_inverse();
      for (std::size_t e = 0; e < 16; ++e)
        ok = ok && std::fabs(direct.a[e] - k.a[e]) <=
                       1e-8 * std::max(1.0, std::fabs(direct.a[e]));
      // Closed-form gain == from-scratch trace difference -tr(A K') + tr(A K).
      const double phi = phi_of(direct);
      ok = ok && std::fabs((phi - prev_phi) - dinfo) <= 1e-8 * std::max(1.0, std::fabs(dinfo));
      prev_phi = phi;
    }
    void on_polish_move(const Mat4& k, std::span<const std::size_t> members) override {
      chosen.assign(members.begin(), members.end());
      const Mat4 direct = direct_inverse();
      for (std::size_t e = 0; e < 16; ++e)
        ok = ok && std::fabs(direct.a[e] - k.a[e]) <=
                       1e-8 * std::max(1.0, std::fabs(direct.a[e]));
      prev_phi = phi_of(direct);  // rebase; polish moves are not gain-scored
    }
  };
  const SigmoidParams theta{0.1, 0.8, -22.0, 1.0};
  Rng rng(606);
  bool ok = true;
  for (int inst = 0; inst < 100; ++inst) {
    const auto bins = even_bins(18, 26, 4);
    const auto pool = random_pool(rng, 8, bins);
    Checker checker;
    checker.pool = &pool;
    checker.theta = &theta;
    checker.cfg.alpha = 70.0;
    checker.cfg.lambda_balance = 1e-4;
    const auto mid = bins.midpoints();
    for (std::size_t b = 0; b < mid.size(); ++b)
      checker.a.add_outer(boundary_jacobian(mid[b], theta), 0.25);
    // Baseline phi for the empty design.
    const Mat4 k0 = invert(Mat4::identity(checker.cfg.eta_ridge));
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) checker.prev_phi -= checker.a(r, c) * k0(c, r);
    greedy_select(pool, theta, checker.cfg, bins, &checker);
    ok = ok && checker.ok;
  }
  report(6, "K tracks direct inversion and the gain matches trace differences", ok);
}

TEST_CASE("criterion 07: greedy near-optimality on enumerable pools") {
  const auto t0 = std::chrono::steady_clock::now();
  const SigmoidParams theta{0.1, 0.8, -22.0, 1.0};
  Rng rng(707);
  int near_optimal = 0;
  bool never_below_random = true;
  for (int inst = 0; inst < 100; ++inst) {
    const auto bins = even_bins(18, 26, 4);
    const auto pool = random_pool(rng, 10, bins);
    DesignConfig cfg;
    cfg.alpha = 45.0;
    cfg.lambda_balance = 1e-4;
    const auto sel = greedy_select(pool, theta, cfg, bins);
    const auto best = exhaustive_design(pool, theta, cfg, bins);
    if (sel.objective_value >= best.objective - 0.05 * std::fabs(best.objective))
      ++near_optimal;

    double pool_cost = 0.0;
    for (const auto& c : pool) pool_cost += c.cost;
    const double budget = cfg.alpha / 100.0 * pool_cost;
    const auto mid = bins.midpoints();
    for (int r = 0; r < 1000; ++r) {
      std::vector<std::size_t> order(pool.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
      std::vector<std::size_t> subset;
      double cost = 0.0;
      for (std::size_t idx : order) {
        if (rng.uniform() < 0.4) continue;
        if (cost + pool[idx].cost > budget) continue;
        cost += pool[idx].cost;
        subset.push_back(idx);
      }
      const double value =
          design_objective(pool, subset, theta, cfg, mid, *cfg.lambda_balance, bins.bins());
      never_below_random = never_below_random &&
                           sel.objective_value >= value - 1e-9 - 1e-9 * std::fabs(value);
    }
  }
  const bool in_time = seconds_since(t0) < 60.0;
  report(7, "greedy+polish >= 95% of optimum in >=95/100 pools and beats 1000 random subsets",
         near_optimal >= 95 && never_below_random && in_time);
}

TEST_CASE("criterion 08: budget plateau on synthetic pools") {
  // Two synthetic periods; select on the first, fit on the selection, score
  // out-of-distribution pinball on the second.
  auto spec = accept_spec(808, 3000);
  spec.drift = {0.0, 0.0};
  const auto synth = generate(spec);
  const auto periods = PeriodPartition::from_cutoffs({synth.period_dates[1]});
  const auto parts = partition_periods(synth.dataset, periods);
  std::vector<double> tz, ty, vz, vy;
  parts[0].task_points("synthetic", tz, ty);
  parts[1].task_points("synthetic", vz, vy);

  const auto bins = build_bins(tz, 4, 10);
  std::vector<std::string> ids;
  std::vector<double> zs, costs;
  for (const auto& r : parts[0].records) {
    ids.push_back(r.model_id);
    zs.push_back(derive_log_compute(r));
    costs.push_back(*r.param_count);
  }
  const auto pool = make_candidates(ids, zs, costs, bins);
  const auto theta0 = fit_sigmoid(tz, ty, fit_cfg(1)).sigmoid_params();

  DesignConfig cfg;
  const LossConfig loss{0.98, 50.0};
  auto downstream = [&](const std::vector<std::string>& chosen) {
    std::vector<double> fz, fy;
    for (const auto& r : parts[0].records) {
      if (std::find(chosen.begin(), chosen.end(), r.model_id) == chosen.end()) continue;
      fz.push_back(derive_log_compute(r));
      fy.push_back(*r.score("synthetic"));
    }
    const auto m = fit_sigmoid(fz, fy, fit_cfg(2));
    const auto rep = evaluate_scope(m, vz, vy, bins, loss, Scope::out_of_distribution,
                                    Interval{18.0, 26.0});
    return std::make_pair(rep.mean_pinball, rep.global_coverage_error);
  };
  const std::vector<double> alphas{100.0, 50.0, 20.0};
  const auto rows = budget_sweep(pool, theta0, cfg, bins, alphas, downstream);
  const double full = rows[0].ood_pinball;
  const bool ok = std::fabs(rows[1].ood_pinball - full) <= 0.05 * full &&
                  std::fabs(rows[2].ood_pinball - full) <= 0.10 * full;
  report(8, "OOD pinball at alpha=20 within 10% (alpha=50 within 5%) of full budget", ok);
}

TEST_CASE("criterion 09: temporal drift detection") {
  RollingConfig cfg;
  cfg.families = {Family::sigmoid};
  cfg.fit = fit_cfg(9);
  cfg.target_bins = 6;
  cfg.min_mass = 10;

  auto control_spec = accept_spec(909, 4000);
  control_spec.gap = GapLaw::uniform(0.02, 0.35);
  control_spec.bump_max = 0.04;
  control_spec.drift = {0.0, 0.0};
  const auto control = generate(control_spec);
  const auto periods = PeriodPartition::from_cutoffs({control.period_dates[1]});
  const auto rc = rolling_protocol(control.dataset, periods, "synthetic", cfg);
  const double control_dev = rc.splits[0].families[0].ood->global_coverage_error;

  auto drift_spec = control_spec;
  drift_spec.drift = {0.0, 0.1};
  const auto drifted = generate(drift_spec);
  const auto rd = rolling_protocol(drifted.dataset, periods, "synthetic", cfg);
  const double drift_dev = rd.splits[0].families[0].ood->global_coverage_error;

  const bool ok = drift_dev <= -0.05 && std::fabs(control_dev) <= 0.03;
  report(9, "lifted boundary under-covers (<= -0.05) while the control stays within 0.03", ok);
}

TEST_CASE("criterion 10: contamination-test calibration") {
  Rng rng(1010);
  auto simulate_pairs = [&](double gamma) {
    std::vector<ShiftPair> pairs;
    for (int i = 0; i < 120; ++i) {
      const double m = rng.uniform(10.0, 90.0);
      const bool post = i % 2 == 0;
      const double eta = 0.1 + 0.8 * std::log(0.01 * m / (1.0 - 0.01 * m)) +
                         gamma * (post ? 1.0 : 0.0) + 0.3 * rng.normal();
      const double y = 100.0 / (1.0 + std::exp(-eta));
      pairs.push_back({m, y, post});
    }
    return pairs;
  };

  bool coverage_ok = true;
  for (double gamma : {0.0, 0.5}) {
    int covered = 0;
    for (int rep = 0; rep < 200; ++rep) {
      const auto res = contamination_shift_test(simulate_pairs(gamma), false);
      if (res.ci_lo <= gamma && gamma <= res.ci_hi) ++covered;
    }
    const double rate = covered / 200.0;
    coverage_ok = coverage_ok && rate >= 0.90 && rate <= 0.99;
  }

  // Under the null the p-values should be uniform.
  std::vector<double> pvals;
  for (int rep = 0; rep < 200; ++rep)
    pvals.push_back(contamination_shift_test(simulate_pairs(0.0), false).p_value);
  std::sort(pvals.begin(), pvals.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < pvals.size(); ++i) {
    const double ecdf_hi = static_cast<double>(i + 1) / 200.0;
    const double ecdf_lo = static_cast<double>(i) / 200.0;
    ks = std::max({ks, std::fabs(ecdf_hi - pvals[i]), std::fabs(pvals[i] - ecdf_lo)});
  }
  report(10, "95% CI coverage in [0.90, 0.99] and null p-values uniform (KS < 0.1)",
         coverage_ok && ks < 0.1);
}

TEST_CASE("criterion 11: released-table replication (conditional)") {
  const char* path = std::getenv("CAPBOUND_LEADERBOARD_CSV");
  if (path == nullptr || !fs::exists(path)) {
    std::printf("[SKIP] criterion 11: released dataset not fetched; criteria 1-10 "
                "constitute acceptance\n");
    return;
  }
  const Dataset data = load_records(path);
  struct Target {
    const char* task;
    double value;
  };
  const Target targets[] = {{"ifeval", 0.828}, {"bbh", 0.700},  {"math_lvl_5", 0.539},
                            {"gpqa", 0.424},   {"musr", 0.535}, {"mmlu_pro", 0.563}};
  bool ok = true;
  for (const auto& t : targets) {
    if (!data.has_task(t.task)) {
      std::printf("[SKIP] criterion 11: task %s missing from the provided table\n", t.task);
      return;
    }
    std::vector<double> z, y;
    data.task_points(t.task, z, y);
    const auto m = fit_sigmoid(z, y, fit_cfg(11));
    ok = ok && std::fabs(m.predict(24.0) - t.value) <= 0.02;
  }

  // Estimator ordering across rolling splits: the sigmoid family has the
  // best out-of-distribution calibration.
  const auto periods = PeriodPartition::from_cutoffs(
      {parse_date("2024-07-01"), parse_date("2024-10-01"), parse_date("2025-01-01")});
  RollingConfig rcfg;
  rcfg.fit = fit_cfg(11);
  double sigmoid_cal = 1e300;
  double best_other = 1e300;
  for (const auto& t : targets) {
    const auto rr = rolling_protocol(data, periods, t.task, rcfg);
    for (const auto& agg : rr.aggregates) {
      if (!agg.ood_calibration) continue;
      if (agg.family == Family::sigmoid)
        sigmoid_cal = std::min(sigmoid_cal, *agg.ood_calibration);
      else
        best_other = std::min(best_other, *agg.ood_calibration);
    }
  }
  ok = ok && sigmoid_cal <= best_other;

  // Size-time boundary for the two contrasting tasks (base-invariant values).
  struct SizeTimeTarget {
    const char* task;
    double q_early, q_late;
  };
  for (const auto& t : {SizeTimeTarget{"math_lvl_5", 0.03, 0.94},
                        SizeTimeTarget{"mmlu_pro", 0.15, 0.52}}) {
    std::vector<SizeTimePoint> points;
    for (const auto& r : data.records) {
      if (!r.param_count) continue;
      const auto s = r.score(t.task);
      if (!s) continue;
      points.push_back(SizeTimePoint{std::log(*r.param_count), r.release_date, *s});
    }
    const auto fit =
        fit_size_time(points, parse_date("2024-10-01"), std::log(1.3e10), fit_cfg(11));
    ok = ok && std::fabs(fit.q_ref_early - t.q_early) <= 0.05 &&
         std::fabs(fit.q_ref_late - t.q_late) <= 0.05;
  }
  report(11, "published boundary values, estimator ordering and size-time summaries", ok);
}

TEST_CASE("criterion 12: CLI reruns are byte-identical") {
  namespace tu = capbound::testutil;
  const auto base = tu::tmp_dir() / "accept_cli";
  fs::create_directories(base);
  auto run = [&](const std::string& args, const std::string& log) {
    const std::string cmd = std::string(CAPBOUND_CLI) + " " + args + " >" +
                            (base / log).string() + " 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  bool ok = true;

  const auto sim1 = base / "sim1", sim2 = base / "sim2";
  ok = ok && run("simulate --n 800 --seed 12 --gap-law uniform --drift 0,0 --out " +
                     sim1.string(), "sim1.log") == 0;
  ok = ok && run("simulate --n 800 --seed 12 --gap-law uniform --drift 0,0 --out " +
                     sim2.string(), "sim2.log") == 0;
  ok = ok && tu::read_file(sim1 / "dataset.csv") == tu::read_file(sim2 / "dataset.csv");
  ok = ok && tu::read_file(sim1 / "report.json") == tu::read_file(sim2 / "report.json");

  const std::string data = (sim1 / "dataset.csv").string();
  struct Cmd {
    const char* name;
    std::string args;
  };
  const auto fitA = base / "fitA", fitB = base / "fitB";
  ok = ok && run("fit --data " + data + " --task synthetic --family sigmoid --seed 5 --out " +
                     fitA.string(), "fitA.log") == 0;
  ok = ok && run("fit --data " + data + " --task synthetic --family sigmoid --seed 5 --out " +
                     fitB.string(), "fitB.log") == 0;

  // Two-task variant for the pairwise diagnostics.
  Dataset two_task = load_records(sim1 / "dataset.csv");
  for (auto& r : two_task.records) {
    const double s = *r.score("synthetic");
    r.scores["probe"] = std::min(1.0, std::max(0.0, 0.05 + 0.85 * s));
  }
  const auto two_task_csv = base / "two_task.csv";
  save_csv(dataset_from_records(two_task.records), two_task_csv);

  const std::vector<Cmd> cmds = {
      {"evaluate", "evaluate --data " + data +
                       " --task synthetic --cutoffs 2024-06-29 --families constant,sigmoid"
                       " --min-mass 5 --seed 3"},
      {"sweep", "sweep --data " + data +
                    " --task synthetic --cutoffs 2024-06-29 --kappa-grid 50 --lambda-grid"
                    " 1e-3 --min-mass 5 --seed 3"},
      {"design", "design --pool " + data + " --theta0 " + (fitA / "model.json").string() +
                     " --alpha 30"},
      {"diagnose-dominance",
       "diagnose dominance --data " + data + " --task synthetic --size-cutoff 13e9"},
      {"diagnose-size-time", "diagnose size-time --data " + data +
                                 " --task synthetic --cutoff 2024-06-29 --seed 2"},
      {"diagnose-shift", "diagnose shift --data " + two_task_csv.string() +
                             " --reference-task synthetic --target-task probe"
                             " --post-date 2024-06-29 --restrict"},
      {"diagnose-pca", "diagnose pca --data " + two_task_csv.string() +
                           " --tasks synthetic --tasks probe --k 1 --seed 4"},
  };
  for (const auto& cmd : cmds) {
    const auto dirA = base / (std::string(cmd.name) + "_A");
    const auto dirB = base / (std::string(cmd.name) + "_B");
    ok = ok && run(cmd.args + " --out " + dirA.string(), std::string(cmd.name) + "A.log") == 0;
    ok = ok && run(cmd.args + " --out " + dirB.string(), std::string(cmd.name) + "B.log") == 0;
    ok = ok && tu::read_file(dirA / "report.json") == tu::read_file(dirB / "report.json");
    ok = ok && tu::read_file(dirA / "report.csv") == tu::read_file(dirB / "report.csv");
  }
  ok = ok && tu::read_file(fitA / "model.json") == tu::read_file(fitB / "model.json");
  ok = ok && tu::read_file(fitA / "report.json") == tu::read_file(fitB / "report.json");
  report(12, "every command reproduces byte-identical reports under a fixed manifest", ok);
}
