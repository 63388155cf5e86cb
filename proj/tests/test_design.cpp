#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "capbound/design.hpp"
#include "capbound/errors.hpp"
#include "capbound/linalg.hpp"
#include "capbound/rng.hpp"
#include "capbound/synth.hpp"

using namespace capbound;

namespace {

const SigmoidParams kTheta{0.1, 0.8, -22.0, 1.0};

BinPartition simple_bins(double lo, double hi, int n_bins) {
  // Evenly spaced synthetic partition for design tests.
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
    const auto b = bins.assign(z);
    pool[i] = DesignCandidate{"c" + std::to_string(i), z, rng.uniform(0.5, 8.0), *b};
  }
  return pool;
}

// Inverse via the generic dense solver, independent of Mat4::invert.
Mat4 invert_by_solve(const Mat4& m) {
  Mat4 out;
  for (std::size_t c = 0; c < 4; ++c) {
    std::vector<double> a(16);
    for (std::size_t i = 0; i < 16; ++i) a[i] = m.a[i];
    std::vector<double> e(4, 0.0);
    e[c] = 1.0;
    const auto col = solve_dense(a, e, 4);
    for (std::size_t r = 0; r < 4; ++r) out(r, c) = col[r];
  }
  return out;
}

}  // namespace

TEST_CASE("boundary jacobian degenerate components") {
  const Vec4 j0 = boundary_jacobian(3.0, SigmoidParams{0.2, 0.0, -22.0, 1.0});
  CHECK(j0[0] == 1.0);
  CHECK(j0[2] == 0.0);
  CHECK(j0[3] == 0.0);
  const Vec4 jz = boundary_jacobian(0.0, kTheta);
  CHECK(jz[3] == 0.0);
}

TEST_CASE("boundary jacobian matches finite differences in theta") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    SigmoidParams t;
    t.floor = rng.uniform(0.01, 0.3);
    t.rise = rng.uniform(0.1, 0.6);
    t.offset = rng.uniform(-30.0, -10.0);
    t.slope = rng.uniform(0.2, 2.0);
    const double z = rng.uniform(18.0, 26.0);
    const Vec4 jac = boundary_jacobian(z, t);
    const double h = 1e-6;
    auto fd = [&](auto&& bump) {
      SigmoidParams up = t, dn = t;
      bump(up, h);
      bump(dn, -h);
      return (up.predict(z) - dn.predict(z)) / (2.0 * h);
    };
    const double fds[4] = {
        fd([](SigmoidParams& p, double e) { p.floor += e; }),
        fd([](SigmoidParams& p, double e) { p.rise += e; }),
        fd([](SigmoidParams& p, double e) { p.offset += e; }),
        fd([](SigmoidParams& p, double e) { p.slope += e; }),
    };
    for (int c = 0; c < 4; ++c)
      CHECK(std::fabs(jac[static_cast<std::size_t>(c)] - fds[c]) /
                std::max(1.0, std::fabs(fds[c])) <
            1e-6);
  }
}

TEST_CASE("information with an empty selection is the pure ridge") {
  DesignConfig cfg;
  const auto bins = simple_bins(18, 26, 4);
  const auto mid = bins.midpoints();
  const auto info = information_and_variance({}, kTheta, cfg, mid);
  for (std::size_t b = 0; b < mid.size(); ++b) {
    const Vec4 j = boundary_jacobian(mid[b], kTheta);
    CHECK(info.v[b] == doctest::Approx(dot(j, j) / cfg.eta_ridge).epsilon(1e-9));
  }
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(info.sigma(i, i) == doctest::Approx(1.0 / cfg.eta_ridge).epsilon(1e-9));
}

TEST_CASE("adding a candidate never raises any bin variance") {
  Rng rng(43);
  DesignConfig cfg;
  const auto bins = simple_bins(18, 26, 4);
  const auto mid = bins.midpoints();
  for (int trial = 0; trial < 30; ++trial) {
    auto pool = random_pool(rng, 6, bins);
    std::vector<DesignCandidate> base(pool.begin(), pool.begin() + 5);
    const auto before = information_and_variance(base, kTheta, cfg, mid);
    base.push_back(pool[5]);
    const auto after = information_and_variance(base, kTheta, cfg, mid);
    for (std::size_t b = 0; b < mid.size(); ++b) {
      CHECK(after.v[b] >= 0.0);  // PSD quadratic form
      CHECK(after.v[b] <= before.v[b] + 1e-9 * before.v[b]);
    }
  }
}

TEST_CASE("phi_info agrees with a generic linear-solver oracle") {
  Rng rng(47);
  DesignConfig cfg;
  const auto bins = simple_bins(18, 26, 4);
  const auto mid = bins.midpoints();
  for (int trial = 0; trial < 30; ++trial) {
    const auto pool = random_pool(rng, 7, bins);
    const auto info = information_and_variance(pool, kTheta, cfg, mid);
    Mat4 m = Mat4::identity(cfg.eta_ridge);
    for (const auto& c : pool) m.add_outer(boundary_jacobian(c.z, kTheta));
    const Mat4 alt = invert_by_solve(m);
    double phi = 0.0;
    for (std::size_t b = 0; b < mid.size(); ++b)
      phi -= 0.25 * quad_form(alt, boundary_jacobian(mid[b], kTheta));
    CHECK(info.phi_info == doctest::Approx(phi).epsilon(1e-8));
  }
}

TEST_CASE("phi_bal arithmetic and balance preference") {
  const std::vector<long> zeros(4, 0);
  CHECK(phi_bal(zeros, 0.01) == doctest::Approx(4.0 * std::log(0.01)));
  CHECK(std::log(1.01) - std::log(0.01) == doctest::Approx(4.61512051684126).epsilon(1e-9));

  // For a fixed total, the most even allocation maximizes the concave sum.
  for (long total = 1; total <= 8; ++total) {
    double best = -1e300;
    std::vector<long> best_alloc;
    for (long a = 0; a <= total; ++a)
      for (long b = 0; a + b <= total; ++b)
        for (long c = 0; a + b + c <= total; ++c) {
          const std::vector<long> alloc{a, b, c, total - a - b - c};
          const double val = phi_bal(alloc, 0.01);
          if (val > best) {
            best = val;
            best_alloc = alloc;
          }
        }
    const auto [mn, mx] = std::minmax_element(best_alloc.begin(), best_alloc.end());
    CHECK(*mx - *mn <= 1);
  }
}

TEST_CASE("full budget with positive gains selects the whole pool") {
  Rng rng(51);
  const auto bins = simple_bins(18, 26, 4);
  auto pool = random_pool(rng, 12, bins);
  DesignConfig cfg;
  cfg.alpha = 100.0;
  cfg.lambda_balance = 0.0;
  const auto sel = greedy_select(pool, kTheta, cfg, bins);
  CHECK(sel.selected.size() == pool.size());
  CHECK(sel.total_cost <= sel.budget + 1e-9);
  // With the balance term off, the reported objective is pure I-optimality.
  std::vector<std::size_t> all(pool.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto info = information_and_variance(pool, kTheta, cfg, bins.midpoints());
  CHECK(sel.objective_value ==
        doctest::Approx(info.phi_info + 0.0 * phi_bal(sel.per_bin_counts, cfg.epsilon_balance))
            .epsilon(1e-12));
}

TEST_CASE("sherman-morrison state matches direct inversion at every step") {
  struct Checker : GreedyObserver {
    std::vector<DesignCandidate> pool;
    DesignConfig cfg;
    std::vector<std::size_t> chosen;
    double worst = 0.0;
    void compare(const Mat4& k) {
      Mat4 m = Mat4::identity(cfg.eta_ridge);
      for (std::size_t i : chosen) m.add_outer(boundary_jacobian(pool[i].z, kTheta));
      const Mat4 direct = invert(m);
      for (std::size_t e = 0; e < 16; ++e)
        worst = std::max(worst, std::fabs(direct.a[e] - k.a[e]) /
                                    std::max(1.0, std::fabs(direct.a[e])));
    }
    void on_step(const Mat4& k, std::size_t idx, double) override {
      chosen.push_back(idx);
      compare(k);
    }
    void on_polish_move(const Mat4& k, std::span<const std::size_t> members) override {
      chosen.assign(members.begin(), members.end());
      compare(k);
    }
  };
  Rng rng(53);
  const auto bins = simple_bins(18, 26, 4);
  for (int trial = 0; trial < 5; ++trial) {
    Checker checker;
    checker.pool = random_pool(rng, 10, bins);
    checker.cfg.alpha = 60.0;
    checker.cfg.lambda_balance = 1e-4;
    greedy_select(checker.pool, kTheta, checker.cfg, bins, &checker);
    CHECK(checker.worst < 1e-8);
  }
}

TEST_CASE("greedy with polish approaches the exhaustive optimum on small pools") {
  Rng rng(59);
  const auto bins = simple_bins(18, 26, 4);
  int near_optimal = 0;
  const int trials = 10;
  for (int trial = 0; trial < trials; ++trial) {
    const auto pool = random_pool(rng, 10, bins);
    DesignConfig cfg;
    cfg.alpha = 45.0;
    cfg.lambda_balance = 1e-4;
    const auto sel = greedy_select(pool, kTheta, cfg, bins);
    const auto best = exhaustive_design(pool, kTheta, cfg, bins);
    CHECK(sel.objective_value <= best.objective + 1e-9);
    if (sel.objective_value >= best.objective - 0.05 * std::fabs(best.objective))
      ++near_optimal;

    // Never worse than a batch of random feasible subsets.
    double pool_cost = 0.0;
    for (const auto& c : pool) pool_cost += c.cost;
    const double budget = cfg.alpha / 100.0 * pool_cost;
    const auto midpoints = bins.midpoints();
    for (int r = 0; r < 200; ++r) {
      std::vector<std::size_t> order(pool.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
      std::vector<std::size_t> subset;
      double cost = 0.0;
      for (std::size_t idx : order) {
        if (rng.uniform() < 0.5) continue;
        if (cost + pool[idx].cost > budget) continue;
        cost += pool[idx].cost;
        subset.push_back(idx);
      }
      const double value = design_objective(pool, subset, kTheta, cfg, midpoints,
                                            *cfg.lambda_balance, bins.bins());
      // Equal subsets evaluated in different member order differ by
      // conditioning-amplified rounding; compare with a relative slack.
      CHECK(sel.objective_value >= value - 1e-9 - 1e-9 * std::fabs(value));
    }
  }
  CHECK(near_optimal >= 9);
}

TEST_CASE("budget feasibility and trace replay") {
  Rng rng(61);
  const auto bins = simple_bins(18, 26, 4);
  for (double alpha : {10.0, 35.0, 70.0}) {
    const auto pool = random_pool(rng, 30, bins);
    DesignConfig cfg;
    cfg.alpha = alpha;
    const auto sel = greedy_select(pool, kTheta, cfg, bins);
    double pool_cost = 0.0;
    for (const auto& c : pool) pool_cost += c.cost;
    CHECK(sel.total_cost <= alpha / 100.0 * pool_cost + 1e-9);

    // Replay the trace: the surviving ids reproduce the reported objective.
    std::vector<std::size_t> members;
    for (const auto& id : sel.selected) {
      const auto it = std::find_if(pool.begin(), pool.end(),
                                   [&](const auto& c) { return c.model_id == id; });
      members.push_back(static_cast<std::size_t>(it - pool.begin()));
    }
    const double replayed = design_objective(pool, members, kTheta, cfg, bins.midpoints(),
                                             sel.lambda_balance_used, bins.bins());
    CHECK(replayed == sel.objective_value);
  }
}

TEST_CASE("anchors beyond the budget leave a feasible prefix and a flag") {
  const auto bins = simple_bins(18, 26, 4);
  std::vector<DesignCandidate> pool;
  for (int i = 0; i < 6; ++i)
    pool.push_back(DesignCandidate{"c" + std::to_string(i), 18.5 + i * 1.4, 10.0,
                                   *bins.assign(18.5 + i * 1.4)});
  DesignConfig cfg;
  cfg.alpha = 20.0;  // budget 12: one anchor fits, the second does not
  const auto sel = greedy_select(pool, kTheta, cfg, bins);
  CHECK(sel.anchor_truncated);
  CHECK(sel.total_cost <= sel.budget + 1e-12);
  CHECK(sel.selected.size() == 1);
}

TEST_CASE("single distinct z falls back to the cheapest anchor") {
  const auto bins = simple_bins(18, 26, 2);
  std::vector<DesignCandidate> pool;
  for (int i = 0; i < 4; ++i)
    pool.push_back(DesignCandidate{"c" + std::to_string(i), 22.0, 4.0 - i, *bins.assign(22.0)});
  DesignConfig cfg;
  cfg.alpha = 100.0;
  const auto sel = greedy_select(pool, kTheta, cfg, bins);
  CHECK(sel.anchor_fallback);
  REQUIRE_FALSE(sel.trace.empty());
  CHECK(sel.trace[0].model_id == "c3");  // cheapest cost 1.0
}

TEST_CASE("budget sweep reduces to the full fit at alpha 100") {
  Rng rng(67);
  const auto bins = simple_bins(18, 26, 4);
  const auto pool = random_pool(rng, 25, bins);
  DesignConfig cfg;
  cfg.lambda_balance = 1e-4;
  std::vector<double> alphas{100.0, 50.0, 20.0, 10.0};
  double full_metric = -1.0;
  std::vector<std::string> at_full;
  const auto rows = budget_sweep(pool, kTheta, cfg, bins, alphas,
                                 [&](const std::vector<std::string>& ids) {
                                   if (full_metric < 0) {
                                     full_metric = static_cast<double>(ids.size());
                                     at_full = ids;
                                   }
                                   return std::make_pair(static_cast<double>(ids.size()), 0.0);
                                 });
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].n_selected == pool.size());  // alpha=100 covers everything
  CHECK(rows[0].cost_fraction == doctest::Approx(1.0));
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i].cost_fraction <= rows[i - 1].cost_fraction + 1e-12);
}

TEST_CASE("small linear algebra rejects singular systems") {
  Mat4 zero;
  CHECK_THROWS_AS(invert(zero), NumericError);
  // Rank-deficient 3x3: third column equals the first.
  std::vector<double> a{1, 2, 1, 2, 5, 2, 3, 7, 3};
  std::vector<double> b{1, 2, 3};
  CHECK_THROWS_AS(solve_dense(a, b, 3), NumericError);
}

TEST_CASE("design configuration validation") {
  DesignConfig cfg;
  cfg.alpha = 101.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = DesignConfig{};
  cfg.epsilon_balance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = DesignConfig{};
  const auto bins = simple_bins(18, 26, 4);
  CHECK_THROWS_AS(greedy_select({}, kTheta, cfg, bins), ValidationError);
  CHECK_THROWS_AS(exhaustive_design({}, kTheta, cfg, bins), ValidationError);  // lambda unset
}
