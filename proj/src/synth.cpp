#include "capbound/synth.hpp"

#include <algorithm>
#include <cmath>

#include "capbound/errors.hpp"
#include "capbound/rng.hpp"

namespace capbound {

void GeneratorSpec::validate() const {
  if (n < 0) throw ValidationError("generator: n must be nonnegative");
  if (!(z_hi >= z_lo)) throw ValidationError("generator: need z_hi >= z_lo");
  if (!(exceed_prob >= 0.0 && exceed_prob < 1.0))
    throw ValidationError("generator: exceed_prob must lie in [0,1)");
  if (!(bump_max >= 0.0)) throw ValidationError("generator: bump_max must be nonnegative");
  if (gap.kind == GapLaw::Kind::uniform && !(gap.max_gap >= gap.min_gap && gap.min_gap >= 0.0))
    throw ValidationError("generator: uniform gap needs 0 <= min_gap <= max_gap");
  if (!(truth.floor >= 0.0 && truth.rise >= 0.0 && truth.floor + truth.rise <= 1.0 &&
        truth.slope >= 0.0))
    throw ValidationError("generator: truth violates the sigmoid constraints");
}

double SynthData::quantile(double z, std::size_t period) const {
  const double offset = period < period_offsets.size() ? period_offsets[period] : 0.0;
  return std::min(1.0, std::max(0.0, truth.predict(z) + offset));
}

nlohmann::ordered_json SynthData::truth_json() const {
  nlohmann::ordered_json j;
  j["task"] = task;
  j["truth"] = {{"floor", truth.floor},
                {"rise", truth.rise},
                {"offset", truth.offset},
                {"slope", truth.slope}};
  j["period_offsets"] = period_offsets;
  nlohmann::ordered_json dates = nlohmann::ordered_json::array();
  for (const auto& d : period_dates) dates.push_back(format_date(d));
  j["period_dates"] = std::move(dates);
  return j;
}

SynthData generate(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  SynthData out;
  out.truth = spec.truth;
  out.task = spec.task;
  const std::size_t periods = spec.drift.empty() ? 1 : spec.drift.size();
  out.period_offsets = spec.drift.empty() ? std::vector<double>{0.0} : spec.drift;
  const Date base = parse_date("2024-01-01");
  for (std::size_t p = 0; p < periods; ++p)
    out.period_dates.push_back(Date{base.days + static_cast<int>(p) * 180});

  std::vector<ModelRecord> records;
  records.reserve(static_cast<std::size_t>(spec.n));
  for (long i = 0; i < spec.n; ++i) {
    const std::size_t period =
        static_cast<std::size_t>(i) * periods / static_cast<std::size_t>(std::max<long>(spec.n, 1));
    const double z = rng.uniform(spec.z_lo, spec.z_hi);
    const double q = out.quantile(z, period);
    const bool exceeds = rng.uniform() < spec.exceed_prob;
    double y;
    if (exceeds) {
      y = std::min(1.0, q + rng.uniform() * spec.bump_max);
    } else {
      double gap;
      if (spec.gap.kind == GapLaw::Kind::uniform)
        gap = spec.gap.min_gap + rng.uniform() * (spec.gap.max_gap - spec.gap.min_gap);
      else
        gap = rng.beta_int(2, 5) * q;
      y = std::min(1.0, std::max(0.0, q - gap));
    }
    ModelRecord r;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "synth-%06ld", i);
    r.model_id = buf;
    r.base_model_id = "synthetic-base";
    r.pretraining_flops = std::pow(10.0, z);
    // Compute-optimal-style cost proxy: params grow like sqrt(FLOPs).
    r.param_count = std::sqrt(*r.pretraining_flops / 120.0);
    r.release_date = out.period_dates[period];
    r.scores[spec.task] = y;
    r.flags.post_trained = true;
    records.push_back(std::move(r));
  }
  out.dataset = dataset_from_records(std::move(records));
  return out;
}

double empirical_quantile(std::span<const double> y, double tau) {
  if (y.empty()) throw ValidationError("empirical_quantile: empty input");
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("empirical_quantile: tau in (0,1)");
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = std::ceil(tau * static_cast<double>(sorted.size())) - 1.0;
  const std::size_t idx = static_cast<std::size_t>(
      std::min<double>(std::max(pos, 0.0), static_cast<double>(sorted.size() - 1)));
  return sorted[idx];
}

ExhaustiveResult exhaustive_design(std::span<const DesignCandidate> pool,
                                   const SigmoidParams& theta0, const DesignConfig& cfg,
                                   const BinPartition& bins) {
  cfg.validate();
  if (pool.size() > 20)
    throw ValidationError("exhaustive_design: pool too large to enumerate");
  if (!cfg.lambda_balance)
    throw ValidationError("exhaustive_design: lambda_balance must be fixed explicitly");
  const double lambda = *cfg.lambda_balance;
  const auto midpoints = bins.midpoints();
  double pool_cost = 0.0;
  for (const auto& c : pool) pool_cost += c.cost;
  const double budget = cfg.alpha / 100.0 * pool_cost;

  ExhaustiveResult best;
  best.objective = -std::numeric_limits<double>::infinity();
  const std::uint32_t masks = 1u << pool.size();
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    double cost = 0.0;
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (mask & (1u << i)) {
        cost += pool[i].cost;
        subset.push_back(i);
      }
    }
    if (cost > budget) continue;
    const double value =
        design_objective(pool, subset, theta0, cfg, midpoints, lambda, bins.bins());
    if (value > best.objective) {
      best.objective = value;
      best.subset = std::move(subset);
    }
  }
  return best;
}

}  // namespace capbound
