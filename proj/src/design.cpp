#include "capbound/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "capbound/errors.hpp"
#include "capbound/parallel.hpp"

namespace capbound {

namespace {

std::vector<double> resolve_weights(const DesignConfig& cfg, std::size_t n_bins) {
  if (cfg.bin_weights.empty())
    return std::vector<double>(n_bins, 1.0 / static_cast<double>(n_bins));
  if (cfg.bin_weights.size() != n_bins)
    throw ValidationError("design: bin_weights size does not match the partition");
  double sum = 0.0;
  for (double w : cfg.bin_weights) {
    if (w < 0.0) throw ValidationError("design: bin_weights must be nonnegative");
    sum += w;
  }
  if (!(std::fabs(sum - 1.0) < 1e-9))
    throw ValidationError("design: bin_weights must sum to 1");
  return cfg.bin_weights;
}

Mat4 weighted_midpoint_outer(const SigmoidParams& theta0, std::span<const double> midpoints,
                             std::span<const double> weights) {
  Mat4 a;
  for (std::size_t b = 0; b < midpoints.size(); ++b)
    a.add_outer(boundary_jacobian(midpoints[b], theta0), weights[b]);
  return a;
}

double sm_gain(const Mat4& k, const Mat4& a, const Vec4& u, Vec4* v_out, double* denom_out) {
  const Vec4 v = k.mul(u);
  const double denom = 1.0 + dot(u, v);
  if (v_out) *v_out = v;
  if (denom_out) *denom_out = denom;
  return quad_form(a, v) / denom;
}

void sm_commit(Mat4& k, const Vec4& v, double denom) {
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) k(i, j) -= v[i] * v[j] / denom;
}

}  // namespace

void DesignConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 100.0)) throw ValidationError("design: alpha in [0,100]");
  if (!(epsilon_balance > 0.0)) throw ValidationError("design: epsilon_balance > 0");
  if (!(eta_ridge > 0.0)) throw ValidationError("design: eta_ridge > 0");
  if (lambda_balance && *lambda_balance < 0.0)
    throw ValidationError("design: lambda_balance must be nonnegative");
  if (polish_exchanges < 0) throw ValidationError("design: polish_exchanges >= 0");
}

Vec4 boundary_jacobian(double z, const SigmoidParams& theta0) {
  const double s = logistic(theta0.offset + theta0.slope * z);
  const double band = theta0.rise * s * (1.0 - s);
  return Vec4{1.0, s, band, band * z};
}

InfoResult information_and_variance(std::span<const DesignCandidate> selected,
                                    const SigmoidParams& theta0, const DesignConfig& cfg,
                                    std::span<const double> midpoints) {
  cfg.validate();
  const auto weights = resolve_weights(cfg, midpoints.size());
  Mat4 info = Mat4::identity(cfg.eta_ridge);
  for (const auto& c : selected) info.add_outer(boundary_jacobian(c.z, theta0));
  InfoResult res;
  res.sigma = invert(info);
  res.v.resize(midpoints.size());
  res.phi_info = 0.0;
  for (std::size_t b = 0; b < midpoints.size(); ++b) {
    res.v[b] = quad_form(res.sigma, boundary_jacobian(midpoints[b], theta0));
    res.phi_info -= weights[b] * res.v[b];
  }
  return res;
}

double phi_bal(std::span<const long> per_bin_counts, double eps) {
  double acc = 0.0;
  for (long n : per_bin_counts) acc += std::log(static_cast<double>(n) + eps);
  return acc;
}

double design_objective(std::span<const DesignCandidate> pool,
                        std::span<const std::size_t> subset, const SigmoidParams& theta0,
                        const DesignConfig& cfg, std::span<const double> midpoints,
                        double lambda, std::size_t n_bins) {
  std::vector<DesignCandidate> sel;
  sel.reserve(subset.size());
  std::vector<long> counts(n_bins, 0);
  for (std::size_t idx : subset) {
    sel.push_back(pool[idx]);
    ++counts[pool[idx].bin];
  }
  const auto info = information_and_variance(sel, theta0, cfg, midpoints);
  return info.phi_info + lambda * phi_bal(counts, cfg.epsilon_balance);
}

std::vector<DesignCandidate> make_candidates(const std::vector<std::string>& ids,
                                             std::span<const double> z,
                                             std::span<const double> cost,
                                             const BinPartition& bins) {
  if (ids.size() != z.size() || ids.size() != cost.size())
    throw ValidationError("make_candidates: length mismatch");
  std::vector<DesignCandidate> pool(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!(cost[i] > 0.0))
      throw ValidationError("candidate '" + ids[i] + "' has non-positive cost");
    const auto b = bins.assign(z[i]);
    pool[i] = DesignCandidate{ids[i], z[i], cost[i],
                              b ? *b : (z[i] < bins.edges.front() ? 0 : bins.bins() - 1)};
  }
  return pool;
}

DesignSelection greedy_select(std::span<const DesignCandidate> pool,
                              const SigmoidParams& theta0, const DesignConfig& cfg,
                              const BinPartition& bins, GreedyObserver* observer) {
  cfg.validate();
  if (pool.empty()) throw ValidationError("greedy_select: empty pool");
  const auto midpoints = bins.midpoints();
  const auto weights = resolve_weights(cfg, midpoints.size());
  const Mat4 a = weighted_midpoint_outer(theta0, midpoints, weights);

  double pool_cost = 0.0;
  for (const auto& c : pool) {
    if (!(c.cost > 0.0)) throw ValidationError("greedy_select: non-positive cost");
    if (c.bin >= bins.bins()) throw ValidationError("greedy_select: bin index out of range");
    pool_cost += c.cost;
  }
  const double budget = cfg.alpha / 100.0 * pool_cost;
  // Absorbs accumulated rounding so a full-budget run can afford the whole
  // pool even though the costs are summed in a different order.
  const double cost_slack = 1e-12 * std::max(1.0, budget);

  std::vector<Vec4> jac(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) jac[i] = boundary_jacobian(pool[i].z, theta0);

  const auto phi_info_of = [&](const Mat4& k) {
    double phi = 0.0;
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) phi -= a(r, c) * k(c, r);
    return phi;
  };

  struct State {
    Mat4 k;
    Mat4 info;
    std::vector<long> bin_counts;
    std::vector<bool> in_set;
    std::vector<std::size_t> order;
    double remaining = 0.0;
  };
  const auto rebuild_inverse = [&](State& st) {
    st.info = Mat4::identity(cfg.eta_ridge);
    for (std::size_t idx : st.order) st.info.add_outer(jac[idx]);
    st.k = invert(st.info);
  };
  DesignSelection out;
  out.budget = budget;

  State st;
  st.k = Mat4::identity(1.0 / cfg.eta_ridge);
  st.info = Mat4::identity(cfg.eta_ridge);
  st.bin_counts.assign(bins.bins(), 0);
  st.in_set.assign(pool.size(), false);
  st.remaining = budget;

  int step = 0;
  const auto bal_gain = [&](const std::vector<long>& counts, std::size_t bin) {
    return std::log(static_cast<double>(counts[bin]) + 1.0 + cfg.epsilon_balance) -
           std::log(static_cast<double>(counts[bin]) + cfg.epsilon_balance);
  };

  // Anchors: the two extreme-z models, then up to two nearest the nominal
  // inflection z* = -offset/slope. With fewer than two distinct z values the
  // anchor degenerates to the cheapest candidate.
  std::vector<std::size_t> anchor;
  std::set<double> distinct;
  for (const auto& c : pool) distinct.insert(c.z);
  if (distinct.size() < 2) {
    std::size_t cheapest = 0;
    for (std::size_t i = 1; i < pool.size(); ++i)
      if (pool[i].cost < pool[cheapest].cost) cheapest = i;
    anchor.push_back(cheapest);
    out.anchor_fallback = true;
  } else {
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
      if (pool[i].z < pool[lo].z) lo = i;
      if (pool[i].z > pool[hi].z) hi = i;
    }
    anchor.push_back(lo);
    anchor.push_back(hi);
    if (theta0.slope > 0.0) {
      const double z_star = theta0.inflection();
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < pool.size(); ++i)
        if (i != lo && i != hi) rest.push_back(i);
      std::stable_sort(rest.begin(), rest.end(), [&](std::size_t x, std::size_t y) {
        return std::fabs(pool[x].z - z_star) < std::fabs(pool[y].z - z_star);
      });
      for (std::size_t r = 0; r < rest.size() && r < 2; ++r) anchor.push_back(rest[r]);
    }
  }

  // The anchor batch enters the information matrix directly and K comes from
  // one inversion; rank-one updates only start on the anchored matrix.
  // Updating through the near-singular ridge-only state would lose most of
  // the significand to cancellation.
  double running_phi = phi_info_of(st.k);
  for (std::size_t idx : anchor) {
    if (pool[idx].cost > st.remaining + cost_slack) {
      out.anchor_truncated = true;
      break;
    }
    st.info.add_outer(jac[idx]);
    st.k = invert(st.info);
    const double phi_now = phi_info_of(st.k);
    const double dinfo = phi_now - running_phi;
    running_phi = phi_now;
    const double dbal = bal_gain(st.bin_counts, pool[idx].bin);
    st.in_set[idx] = true;
    st.order.push_back(idx);
    ++st.bin_counts[pool[idx].bin];
    st.remaining -= pool[idx].cost;
    out.trace.push_back(TraceStep{step++, "anchor", pool[idx].model_id, dinfo, dbal, 0.0});
    if (observer) observer->on_step(st.k, idx, dinfo);
  }

  // Balance weight: auto-scale against the information-gain scale available
  // right after anchoring, so the two terms are commensurable by default.
  double lambda = 0.0;
  if (cfg.lambda_balance) {
    lambda = *cfg.lambda_balance;
  } else {
    double max_gain = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (st.in_set[i] || pool[i].cost > st.remaining + cost_slack) continue;
      max_gain = std::max(max_gain, sm_gain(st.k, a, jac[i], nullptr, nullptr));
    }
    lambda = 1e-3 * max_gain;
  }
  out.lambda_balance_used = lambda;

  const auto objective = [&](const State& state) {
    return design_objective(pool, state.order, theta0, cfg, midpoints, lambda, bins.bins());
  };

  // Greedy gain-per-cost additions. Candidate gains against the frozen state
  // are independent, so the scan runs parallel; the argmax stays
  // deterministic because ties resolve to the lowest index over a fully
  // materialized array. With record == false the same loop serves as the
  // silent completion used to evaluate polish exchanges.
  std::vector<double> gains(pool.size());
  std::vector<double> dinfos(pool.size());
  std::vector<double> dbals(pool.size());
  const std::size_t npos_idx = pool.size();
  const auto greedy_additions = [&](State& state, bool record, std::size_t ban_a,
                                    std::size_t ban_b) {
    while (true) {
      par::for_each_index(pool.size(), [&](std::size_t i) {
        if (state.in_set[i] || i == ban_a || i == ban_b ||
            pool[i].cost > state.remaining + cost_slack) {
          gains[i] = -std::numeric_limits<double>::infinity();
          return;
        }
        const double dinfo = sm_gain(state.k, a, jac[i], nullptr, nullptr);
        const double dbal = bal_gain(state.bin_counts, pool[i].bin);
        dinfos[i] = dinfo;
        dbals[i] = dbal;
        gains[i] = (dinfo + lambda * dbal) / pool[i].cost;
      });
      std::size_t best = pool.size();
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (gains[i] == -std::numeric_limits<double>::infinity()) continue;
        if (best == pool.size() || gains[i] > gains[best]) best = i;
      }
      if (best == pool.size() || gains[best] <= 0.0) break;
      Vec4 v;
      double denom = 0.0;
      sm_gain(state.k, a, jac[best], &v, &denom);
      sm_commit(state.k, v, denom);
      state.info.add_outer(jac[best]);
      // Rank-one updates shed precision while the information matrix is
      // poorly conditioned (huge inverse entries) and drift slowly even
      // afterwards; refresh from the tracked matrix when either applies.
      double k_scale = 0.0;
      for (double e : state.k.a) k_scale = std::max(k_scale, std::fabs(e));
      if (k_scale > 1e3 || state.order.size() % 32 == 31) state.k = invert(state.info);
      state.in_set[best] = true;
      state.order.push_back(best);
      ++state.bin_counts[pool[best].bin];
      state.remaining -= pool[best].cost;
      if (record) {
        out.trace.push_back(
            TraceStep{step++, "greedy", pool[best].model_id, dinfos[best], dbals[best],
                      gains[best]});
        if (observer) observer->on_step(state.k, best, dinfos[best]);
      }
    }
  };
  greedy_additions(st, true, npos_idx, npos_idx);

  // Exchange polish. Each accepted move is scored by the objective it reaches
  // after the greedy additions its freed budget allows. Moves considered per
  // pass: Fedorov 1-exchanges (swap one member for an outside candidate),
  // single removals, and pair removals on small pools; removals matter when
  // an expensive informative candidate can only fit after shedding several
  // cheap members. Swap pairs are ranked by the closed-form immediate change
  // via a rank-one downdate; on large pools only the leaders are re-scored.
  double current = objective(st);
  int exchanges = 0;
  while (exchanges < cfg.polish_exchanges && st.order.size() < pool.size()) {
    struct Move {
      std::size_t out_a, out_b, in;  // npos denotes "unused slot"
      double immediate;
    };
    const std::size_t npos = pool.size();
    std::vector<Move> swaps;
    for (std::size_t oi = 0; oi < st.order.size(); ++oi) {
      const std::size_t rem = st.order[oi];
      // Downdate K to the set without `rem`; fall back to a direct inverse
      // when the downdated matrix is near-singular.
      const Vec4 u = jac[rem];
      const Vec4 v = st.k.mul(u);
      const double denom = 1.0 - dot(u, v);
      Mat4 k_minus;
      if (std::fabs(denom) > 1e-10) {
        k_minus = st.k;
        for (std::size_t r = 0; r < 4; ++r)
          for (std::size_t c = 0; c < 4; ++c) k_minus(r, c) += v[r] * v[c] / denom;
      } else {
        Mat4 info = Mat4::identity(cfg.eta_ridge);
        for (std::size_t idx : st.order)
          if (idx != rem) info.add_outer(jac[idx]);
        k_minus = invert(info);
      }
      std::vector<long> counts_minus = st.bin_counts;
      --counts_minus[pool[rem].bin];
      const double base = phi_info_of(k_minus) +
                          lambda * phi_bal(counts_minus, cfg.epsilon_balance);
      const double freed = st.remaining + pool[rem].cost;
      for (std::size_t add = 0; add < pool.size(); ++add) {
        if (st.in_set[add] || pool[add].cost > freed + cost_slack) continue;
        const double dinfo = sm_gain(k_minus, a, jac[add], nullptr, nullptr);
        const double dbal = bal_gain(counts_minus, pool[add].bin);
        swaps.push_back(Move{rem, npos, add, base + dinfo + lambda * dbal - current});
      }
    }
    std::stable_sort(swaps.begin(), swaps.end(),
                     [](const Move& x, const Move& y) { return x.immediate > y.immediate; });
    const std::size_t probe = swaps.size() <= 64 ? swaps.size()
                                                 : std::min<std::size_t>(swaps.size(), 8);

    std::vector<Move> moves(swaps.begin(), swaps.begin() + static_cast<long>(probe));
    for (std::size_t oi = 0; oi < st.order.size(); ++oi)
      moves.push_back(Move{st.order[oi], npos, npos, 0.0});
    if (pool.size() <= 32) {
      // Small pools afford the full two-out / two-out-one-in neighborhood;
      // the prescribed-add form matters when the right replacement is an
      // expensive candidate the per-cost completion would pass over.
      for (std::size_t oi = 0; oi < st.order.size(); ++oi) {
        for (std::size_t oj = oi + 1; oj < st.order.size(); ++oj) {
          const std::size_t rem_a = st.order[oi];
          const std::size_t rem_b = st.order[oj];
          moves.push_back(Move{rem_a, rem_b, npos, 0.0});
          const double freed = st.remaining + pool[rem_a].cost + pool[rem_b].cost;
          for (std::size_t add = 0; add < pool.size(); ++add) {
            if (st.in_set[add] || pool[add].cost > freed + cost_slack) continue;
            moves.push_back(Move{rem_a, rem_b, add, 0.0});
          }
        }
      }
    }

    const auto apply_move = [&](State& state, const Move& mv) {
      auto drop = [&](std::size_t idx) {
        state.order.erase(std::find(state.order.begin(), state.order.end(), idx));
        state.in_set[idx] = false;
        --state.bin_counts[pool[idx].bin];
        state.remaining += pool[idx].cost;
      };
      drop(mv.out_a);
      if (mv.out_b != npos) drop(mv.out_b);
      if (mv.in != npos) {
        state.order.push_back(mv.in);
        state.in_set[mv.in] = true;
        ++state.bin_counts[pool[mv.in].bin];
        state.remaining -= pool[mv.in].cost;
      }
      rebuild_inverse(state);
    };

    double best_value = current + 1e-12;
    const Move* best_move = nullptr;
    for (const auto& mv : moves) {
      double freed = st.remaining + pool[mv.out_a].cost;
      if (mv.out_b != npos) freed += pool[mv.out_b].cost;
      if (mv.in != npos && pool[mv.in].cost > freed + cost_slack) continue;
      State trial = st;
      apply_move(trial, mv);
      // Removed members sit out the completion, otherwise a removal move
      // just rebuilds the configuration it tried to escape. Later passes may
      // still bring them back when that genuinely improves the objective.
      greedy_additions(trial, false, mv.out_a, mv.out_b);
      const double value = objective(trial);
      if (value > best_value) {
        best_value = value;
        best_move = &mv;
      }
    }
    if (best_move == nullptr) break;

    const Move accepted = *best_move;
    apply_move(st, accepted);
    out.trace.push_back(
        TraceStep{step++, "swap_out", pool[accepted.out_a].model_id, 0.0, 0.0, 0.0});
    if (accepted.out_b != npos)
      out.trace.push_back(
          TraceStep{step++, "swap_out", pool[accepted.out_b].model_id, 0.0, 0.0, 0.0});
    if (accepted.in != npos)
      out.trace.push_back(TraceStep{step++, "swap_in", pool[accepted.in].model_id, 0.0, 0.0,
                                    best_value - current});
    if (observer) observer->on_polish_move(st.k, st.order);
    ++exchanges;
    greedy_additions(st, true, accepted.out_a, accepted.out_b);
    current = objective(st);
  }


  for (std::size_t idx : st.order) out.selected.push_back(pool[idx].model_id);
  out.total_cost = budget - st.remaining;
  out.per_bin_counts = st.bin_counts;
  out.objective_value = objective(st);
  return out;
}

nlohmann::ordered_json DesignSelection::to_json() const {
  nlohmann::ordered_json j;
  j["selected"] = selected;
  j["total_cost"] = total_cost;
  j["budget"] = budget;
  j["objective_value"] = objective_value;
  j["lambda_balance_used"] = lambda_balance_used;
  j["per_bin_counts"] = per_bin_counts;
  j["anchor_truncated"] = anchor_truncated;
  j["anchor_fallback"] = anchor_fallback;
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& s : trace) {
    steps.push_back({{"step", s.step},
                     {"kind", s.kind},
                     {"model_id", s.model_id},
                     {"delta_info", s.delta_info},
                     {"delta_bal", s.delta_bal},
                     {"gain_per_cost", s.gain_per_cost}});
  }
  j["trace"] = std::move(steps);
  return j;
}

std::vector<BudgetSweepRow> budget_sweep(std::span<const DesignCandidate> pool,
                                         const SigmoidParams& theta0,
                                         const DesignConfig& cfg, const BinPartition& bins,
                                         std::span<const double> alphas,
                                         const DownstreamEval& downstream) {
  if (!downstream) throw ValidationError("budget_sweep: missing downstream evaluator");
  double pool_cost = 0.0;
  for (const auto& c : pool) pool_cost += c.cost;
  std::vector<BudgetSweepRow> rows;
  for (double alpha : alphas) {
    DesignConfig local = cfg;
    local.alpha = alpha;
    const DesignSelection sel = greedy_select(pool, theta0, local, bins);
    BudgetSweepRow row;
    row.alpha = alpha;
    row.n_selected = sel.selected.size();
    row.cost_fraction = pool_cost > 0.0 ? sel.total_cost / pool_cost : 0.0;
    const auto [pinball, coverage] = downstream(sel.selected);
    row.ood_pinball = pinball;
    row.ood_coverage_error = coverage;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace capbound
