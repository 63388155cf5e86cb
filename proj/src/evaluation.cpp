#include "capbound/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "capbound/errors.hpp"

namespace capbound {

namespace {

const char* scope_name(Scope s) {
  return s == Scope::in_distribution ? "in_distribution" : "out_of_distribution";
}

}  // namespace

double mean_pinball(const BoundaryModel& model, std::span<const double> z,
                    std::span<const double> y, const LossConfig& loss) {
  if (z.size() != y.size()) throw ValidationError("z and y lengths differ");
  if (z.empty()) throw ValidationError("mean_pinball: empty data");
  double acc = 0.0;
  long used = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto pred = model.predict_checked(z[i]);
    if (!pred) continue;
    acc += smoothed_pinball(y[i] - *pred, loss);
    ++used;
  }
  if (used == 0) throw ValidationError("mean_pinball: no points inside the model range");
  return acc / static_cast<double>(used);
}

std::vector<BinCoverage> coverage_by_bin(const BoundaryModel& model,
                                         std::span<const double> z,
                                         std::span<const double> y,
                                         const BinPartition& bins, double tau) {
  std::vector<long> n(bins.bins(), 0);
  std::vector<long> covered(bins.bins(), 0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto b = bins.assign(z[i]);
    if (!b) continue;
    const auto pred = model.predict_checked(z[i]);
    if (!pred) continue;
    ++n[*b];
    if (y[i] <= *pred) ++covered[*b];
  }
  std::vector<BinCoverage> out;
  for (std::size_t b = 0; b < bins.bins(); ++b) {
    if (n[b] == 0) continue;
    const double tau_hat = static_cast<double>(covered[b]) / static_cast<double>(n[b]);
    out.push_back(BinCoverage{b, n[b], tau_hat, tau_hat - tau});
  }
  return out;
}

EvalReport evaluate_scope(const BoundaryModel& model, std::span<const double> z,
                          std::span<const double> y, const BinPartition& bins,
                          const LossConfig& loss, Scope scope, Interval overlap) {
  EvalReport rep;
  rep.scope = scope;
  rep.overlap = overlap;
  std::vector<double> zin, yin;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!overlap.contains(z[i])) {
      ++rep.n_out_of_range;
      continue;
    }
    zin.push_back(z[i]);
    yin.push_back(y[i]);
  }
  if (zin.empty()) throw ValidationError("evaluate_scope: no points inside the overlap");
  rep.mean_pinball = mean_pinball(model, zin, yin, loss);
  rep.coverage_by_bin = coverage_by_bin(model, zin, yin, bins, loss.tau);
  {
    double acc = 0.0;
    long used = 0;
    for (std::size_t i = 0; i < zin.size(); ++i) {
      const auto pred = model.predict_checked(zin[i]);
      if (!pred) continue;
      acc += exact_pinball(yin[i] - *pred, loss.tau);
      ++used;
    }
    rep.mean_exact_pinball = acc / static_cast<double>(used);
  }

  long used = 0, covered = 0;
  for (std::size_t i = 0; i < zin.size(); ++i) {
    const auto pred = model.predict_checked(zin[i]);
    if (!pred) {
      ++rep.n_out_of_range;
      continue;
    }
    ++used;
    if (yin[i] <= *pred) ++covered;
  }
  rep.n_points = used;
  rep.global_coverage_error =
      static_cast<double>(covered) / static_cast<double>(used) - loss.tau;
  double abs_dev = 0.0;
  for (const auto& c : rep.coverage_by_bin) abs_dev += std::fabs(c.deviation);
  rep.mean_abs_bin_deviation =
      rep.coverage_by_bin.empty() ? 0.0
                                  : abs_dev / static_cast<double>(rep.coverage_by_bin.size());
  return rep;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["scope"] = scope_name(scope);
  j["mean_pinball"] = mean_pinball;
  j["mean_exact_pinball"] = mean_exact_pinball;
  j["global_coverage_error"] = global_coverage_error;
  j["mean_abs_bin_deviation"] = mean_abs_bin_deviation;
  j["overlap"] = {{"lo", overlap.lo}, {"hi", overlap.hi}};
  j["n_points"] = n_points;
  j["n_out_of_range"] = n_out_of_range;
  nlohmann::ordered_json bins = nlohmann::ordered_json::array();
  for (const auto& c : coverage_by_bin) {
    bins.push_back({{"bin", c.bin}, {"n", c.n}, {"tau_hat", c.tau_hat},
                    {"deviation", c.deviation}});
  }
  j["coverage_by_bin"] = std::move(bins);
  return j;
}

RollingResult rolling_protocol(const Dataset& data, const PeriodPartition& periods,
                               const std::string& task, const RollingConfig& cfg) {
  if (periods.periods() < 2)
    throw ValidationError("rolling_protocol: need at least two periods");
  const auto period_sets = partition_periods(data, periods);

  RollingResult result;
  result.task = task;
  for (std::size_t t = 0; t + 1 < period_sets.size(); ++t) {
    const Dataset& train = period_sets[t];
    const Dataset& valid = period_sets[t + 1];
    SplitReport split;
    split.split = t;
    split.train_label = periods.labels[t];
    split.valid_label = periods.labels[t + 1];

    std::vector<double> tz, ty, vz, vy;
    train.task_points(task, tz, ty);
    valid.task_points(task, vz, vy);
    split.n_train = static_cast<long>(tz.size());
    split.n_valid = static_cast<long>(vz.size());
    if (tz.empty()) {
      for (Family f : cfg.families)
        split.families.push_back({f, true, "no usable training points", {}, {}});
      result.splits.push_back(std::move(split));
      continue;
    }

    const BinPartition bins = build_bins(tz, cfg.target_bins, cfg.min_mass);
    const Interval train_range{*std::min_element(tz.begin(), tz.end()),
                               *std::max_element(tz.begin(), tz.end())};
    std::optional<Interval> overlap;
    if (!vz.empty()) {
      const double vlo = *std::min_element(vz.begin(), vz.end());
      const double vhi = *std::max_element(vz.begin(), vz.end());
      Interval iv{std::max(train_range.lo, vlo), std::min(train_range.hi, vhi)};
      if (iv.lo <= iv.hi) overlap = iv;
    }
    split.overlap = overlap;

    for (Family f : cfg.families) {
      SplitFamilyResult fr;
      fr.family = f;
      try {
        BoundaryModel model = [&]() {
          switch (f) {
            case Family::constant: return fit_constant(ty, cfg.fit);
            case Family::binwise:
              return fit_binwise(tz, ty, cfg.target_bins, cfg.min_mass, cfg.fit);
            case Family::sigmoid: return fit_sigmoid(tz, ty, cfg.fit);
            case Family::ispline:
              return fit_ispline(tz, ty, cfg.knot_count, cfg.spline_order, cfg.fit);
          }
          throw ValidationError("unknown family");
        }();
        fr.id = evaluate_scope(model, tz, ty, bins, cfg.fit.loss,
                               Scope::in_distribution, train_range);
        if (overlap && !vz.empty()) {
          fr.ood = evaluate_scope(model, vz, vy, bins, cfg.fit.loss,
                                  Scope::out_of_distribution, *overlap);
        }
      } catch (const ValidationError& e) {
        fr.skipped = true;
        fr.skip_reason = e.what();
        fr.id.reset();
        fr.ood.reset();
      }
      split.families.push_back(std::move(fr));
    }
    result.splits.push_back(std::move(split));
  }

  // Aggregate across splits; skipped splits stay out of the averages rather
  // than entering as zeros.
  for (Family f : cfg.families) {
    FamilyAggregate agg;
    agg.family = f;
    double idp = 0, oodp = 0, idc = 0, oodc = 0, idx = 0, oodx = 0;
    long n_id = 0, n_ood = 0;
    for (const auto& split : result.splits) {
      for (const auto& fr : split.families) {
        if (fr.family != f || fr.skipped) continue;
        if (fr.id) {
          idp += fr.id->mean_pinball;
          idc += fr.id->mean_abs_bin_deviation;
          idx += fr.id->mean_exact_pinball;
          ++n_id;
        }
        if (fr.ood) {
          oodp += fr.ood->mean_pinball;
          oodc += fr.ood->mean_abs_bin_deviation;
          oodx += fr.ood->mean_exact_pinball;
          ++n_ood;
        }
      }
    }
    if (n_id > 0) {
      agg.id_pinball = idp / static_cast<double>(n_id);
      agg.id_calibration = idc / static_cast<double>(n_id);
      agg.id_exact_pinball = idx / static_cast<double>(n_id);
    }
    if (n_ood > 0) {
      agg.ood_pinball = oodp / static_cast<double>(n_ood);
      agg.ood_calibration = oodc / static_cast<double>(n_ood);
      agg.ood_exact_pinball = oodx / static_cast<double>(n_ood);
    }
    agg.splits_used = std::max(n_id, n_ood);
    result.aggregates.push_back(agg);
  }
  // Percent change relative to the constant baseline.
  const auto it = std::find_if(result.aggregates.begin(), result.aggregates.end(),
                               [](const auto& a) { return a.family == Family::constant; });
  if (it != result.aggregates.end() && it->ood_pinball && *it->ood_pinball != 0.0) {
    for (auto& agg : result.aggregates) {
      if (agg.ood_pinball)
        agg.ood_pinball_vs_constant_pct =
            100.0 * (*agg.ood_pinball - *it->ood_pinball) / *it->ood_pinball;
      if (agg.ood_calibration && it->ood_calibration && *it->ood_calibration != 0.0)
        agg.ood_calibration_vs_constant_pct =
            100.0 * (*agg.ood_calibration - *it->ood_calibration) / *it->ood_calibration;
    }
  }
  return result;
}

nlohmann::ordered_json RollingResult::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = task;
  nlohmann::ordered_json splits_json = nlohmann::ordered_json::array();
  for (const auto& split : splits) {
    nlohmann::ordered_json s;
    s["split"] = split.split;
    s["train_period"] = split.train_label;
    s["valid_period"] = split.valid_label;
    s["n_train"] = split.n_train;
    s["n_valid"] = split.n_valid;
    if (split.overlap)
      s["overlap"] = {{"lo", split.overlap->lo}, {"hi", split.overlap->hi}};
    else
      s["overlap"] = nullptr;
    nlohmann::ordered_json fams = nlohmann::ordered_json::array();
    for (const auto& fr : split.families) {
      nlohmann::ordered_json fj;
      fj["family"] = family_name(fr.family);
      fj["skipped"] = fr.skipped;
      if (fr.skipped) fj["skip_reason"] = fr.skip_reason;
      fj["id"] = fr.id ? fr.id->to_json() : nlohmann::ordered_json(nullptr);
      fj["ood"] = fr.ood ? fr.ood->to_json() : nlohmann::ordered_json(nullptr);
      fams.push_back(std::move(fj));
    }
    s["families"] = std::move(fams);
    splits_json.push_back(std::move(s));
  }
  j["splits"] = std::move(splits_json);
  nlohmann::ordered_json aggs = nlohmann::ordered_json::array();
  for (const auto& a : aggregates) {
    nlohmann::ordered_json aj;
    aj["family"] = family_name(a.family);
    aj["splits_used"] = a.splits_used;
    auto put = [&](const char* key, const std::optional<double>& v) {
      if (v) aj[key] = *v;
      else aj[key] = nullptr;
    };
    put("id_pinball", a.id_pinball);
    put("ood_pinball", a.ood_pinball);
    put("id_exact_pinball", a.id_exact_pinball);
    put("ood_exact_pinball", a.ood_exact_pinball);
    put("id_calibration", a.id_calibration);
    put("ood_calibration", a.ood_calibration);
    put("ood_pinball_vs_constant_pct", a.ood_pinball_vs_constant_pct);
    put("ood_calibration_vs_constant_pct", a.ood_calibration_vs_constant_pct);
    aggs.push_back(std::move(aj));
  }
  j["aggregates"] = std::move(aggs);
  return j;
}

std::string RollingResult::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "task,split,train_period,valid_period,family,scope,bin,n,tau_hat,deviation,"
        "mean_pinball\n";
  for (const auto& split : splits) {
    for (const auto& fr : split.families) {
      if (fr.skipped) continue;
      auto rows = [&](const std::optional<EvalReport>& rep) {
        if (!rep) return;
        for (const auto& c : rep->coverage_by_bin) {
          os << task << ',' << split.split << ',' << split.train_label << ','
             << split.valid_label << ',' << family_name(fr.family) << ','
             << scope_name(rep->scope) << ',' << c.bin << ',' << c.n << ',' << c.tau_hat
             << ',' << c.deviation << ',' << rep->mean_pinball << '\n';
        }
      };
      rows(fr.id);
      rows(fr.ood);
    }
  }
  return os.str();
}

std::vector<SweepCell> sensitivity_sweep(const Dataset& data, const PeriodPartition& periods,
                                         const std::string& task,
                                         std::span<const double> kappa_grid,
                                         std::span<const double> lambda_grid,
                                         const RollingConfig& cfg) {
  if (kappa_grid.empty() || lambda_grid.empty())
    throw ValidationError("sensitivity_sweep: empty grid");
  std::vector<SweepCell> cells;
  for (double kappa : kappa_grid) {
    for (double lambda : lambda_grid) {
      RollingConfig local = cfg;
      local.families = {Family::sigmoid};
      local.fit.loss.kappa = kappa;
      local.fit.lambda_ridge = lambda;
      const RollingResult rr = rolling_protocol(data, periods, task, local);
      SweepCell cell;
      cell.kappa = kappa;
      cell.lambda = lambda;
      for (const auto& agg : rr.aggregates) {
        if (agg.family != Family::sigmoid) continue;
        cell.ood_pinball = agg.ood_exact_pinball;
        cell.ood_abs_coverage = agg.ood_calibration;
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace capbound
