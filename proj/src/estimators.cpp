#include "capbound/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "capbound/batch_objective.hpp"
#include "capbound/errors.hpp"
#include "capbound/rng.hpp"

namespace capbound {

namespace {

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

double logit(double x) { return std::log(x / (1.0 - x)); }

void require_curve_fittable(std::span<const double> z, std::span<const double> y,
                            const char* family) {
  if (z.size() != y.size()) throw ValidationError("z and y lengths differ");
  if (z.size() < 4)
    throw ValidationError(std::string(family) + ": need at least 4 points");
  const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
  if (!(*hi > *lo))
    throw ValidationError(std::string(family) +
                          ": all z identical; fit_constant is the appropriate family");
}

// Shared restart loop: inits provided per restart, objective closure fixed.
template <class MakeInit, class Objective>
OptResult best_of_restarts(const OptimizerConfig& opt, MakeInit&& make_init,
                           Objective&& objective) {
  OptResult best;
  best.objective = std::numeric_limits<double>::infinity();
  long total_iters = 0;
  const int restarts = std::max(1, opt.restarts);
  for (int k = 0; k < restarts; ++k) {
    OptResult run = adam_minimize(objective, make_init(k), opt);
    total_iters += run.iterations;
    if (run.objective < best.objective) best = std::move(run);
  }
  best.iterations = static_cast<int>(total_iters);
  return best;
}

double fit_level(std::span<const double> y, const LossConfig& loss) {
  // The smoothed loss is convex in the level, so golden section on [0,1] is
  // exact to tolerance; the box also enforces levels inside [0,1].
  return golden_section_min(
      [&](double c) {
        double acc = 0.0;
        for (double v : y) acc += smoothed_pinball(v - c, loss);
        return acc / static_cast<double>(y.size());
      },
      0.0, 1.0, 1e-8);
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::constant: return "constant";
    case Family::binwise: return "binwise";
    case Family::sigmoid: return "sigmoid";
    case Family::ispline: return "ispline";
  }
  throw ValidationError("unknown family");
}

Family family_from_name(const std::string& name) {
  if (name == "constant") return Family::constant;
  if (name == "binwise") return Family::binwise;
  if (name == "sigmoid") return Family::sigmoid;
  if (name == "ispline") return Family::ispline;
  throw ValidationError("unknown estimator family '" + name +
                        "' (expect constant|binwise|sigmoid|ispline)");
}

double ISplineParams::g(double z) const {
  double acc = intercept;
  for (std::size_t j = 0; j < weights.size(); ++j) acc += weights[j] * basis.i(j, z);
  return acc;
}

std::optional<double> BoundaryModel::predict_checked(double z) const {
  if (family == Family::binwise) {
    const auto& bw = std::get<BinwiseParams>(params);
    const auto bin = bw.partition.assign(z);
    if (!bin) return std::nullopt;
    return bw.levels[*bin];
  }
  return predict(z);
}

double BoundaryModel::predict(double z) const {
  switch (family) {
    case Family::constant: return std::get<ConstantParams>(params).level;
    case Family::sigmoid: return std::get<SigmoidParams>(params).predict(z);
    case Family::ispline: return std::get<ISplineParams>(params).predict(z);
    case Family::binwise: {
      const auto& bw = std::get<BinwiseParams>(params);
      const auto bin = bw.partition.assign(z);
      if (!bin)
        throw ValidationError("binwise prediction outside the partition range");
      return bw.levels[*bin];
    }
  }
  throw ValidationError("unknown family");
}

const SigmoidParams& BoundaryModel::sigmoid_params() const {
  if (family != Family::sigmoid) throw ValidationError("model is not a sigmoid");
  return std::get<SigmoidParams>(params);
}

nlohmann::ordered_json BoundaryModel::to_json() const {
  nlohmann::ordered_json j;
  j["family"] = family_name(family);
  nlohmann::ordered_json p;
  switch (family) {
    case Family::constant:
      p["level"] = std::get<ConstantParams>(params).level;
      break;
    case Family::sigmoid: {
      const auto& s = std::get<SigmoidParams>(params);
      p["floor"] = s.floor;
      p["rise"] = s.rise;
      p["offset"] = s.offset;
      p["slope"] = s.slope;
      break;
    }
    case Family::binwise: {
      const auto& b = std::get<BinwiseParams>(params);
      p["partition"] = b.partition.to_json();
      p["levels"] = b.levels;
      break;
    }
    case Family::ispline: {
      const auto& s = std::get<ISplineParams>(params);
      p["basis"] = s.basis.to_json();
      p["intercept"] = s.intercept;
      p["weights"] = s.weights;
      break;
    }
  }
  j["params"] = std::move(p);
  j["tau"] = loss.tau;
  j["kappa"] = loss.kappa;
  j["lambda_ridge"] = lambda_ridge;
  j["seed"] = meta.seed;
  j["objective"] = meta.objective;
  j["iterations"] = meta.iterations;
  return j;
}

BoundaryModel BoundaryModel::from_json(const nlohmann::json& j) {
  BoundaryModel m;
  m.family = family_from_name(j.at("family").get<std::string>());
  const auto& p = j.at("params");
  switch (m.family) {
    case Family::constant:
      m.params = ConstantParams{p.at("level").get<double>()};
      break;
    case Family::sigmoid: {
      SigmoidParams s;
      s.floor = p.at("floor").get<double>();
      s.rise = p.at("rise").get<double>();
      s.offset = p.at("offset").get<double>();
      s.slope = p.at("slope").get<double>();
      m.params = s;
      break;
    }
    case Family::binwise: {
      BinwiseParams b{BinPartition::from_json(p.at("partition")),
                      p.at("levels").get<std::vector<double>>()};
      m.params = std::move(b);
      break;
    }
    case Family::ispline: {
      ISplineParams s{MonotoneSplineBasis::from_json(p.at("basis")),
                      p.at("intercept").get<double>(),
                      p.at("weights").get<std::vector<double>>()};
      m.params = std::move(s);
      break;
    }
  }
  m.loss.tau = j.at("tau").get<double>();
  m.loss.kappa = j.at("kappa").get<double>();
  m.lambda_ridge = j.at("lambda_ridge").get<double>();
  m.meta.seed = j.at("seed").get<std::uint64_t>();
  m.meta.objective = j.at("objective").get<double>();
  m.meta.iterations = j.value("iterations", 0L);
  return m;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("percentile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

BoundaryModel fit_constant(std::span<const double> y, const FitConfig& cfg) {
  cfg.loss.validate();
  if (y.empty()) throw ValidationError("fit_constant: empty data");
  const double level = fit_level(y, cfg.loss);
  double obj = 0.0;
  for (double v : y) obj += smoothed_pinball(v - level, cfg.loss);
  obj /= static_cast<double>(y.size());
  BoundaryModel m;
  m.family = Family::constant;
  m.params = ConstantParams{level};
  m.meta = FitMeta{obj, 0, cfg.optimizer.seed};
  m.loss = cfg.loss;
  m.lambda_ridge = cfg.lambda_ridge;
  return m;
}

BoundaryModel fit_binwise(std::span<const double> z, std::span<const double> y,
                          int target_bins, int min_mass, const FitConfig& cfg) {
  cfg.loss.validate();
  if (z.size() != y.size()) throw ValidationError("z and y lengths differ");
  if (z.empty()) throw ValidationError("fit_binwise: empty data");
  BinwiseParams bw;
  bw.partition = build_bins(z, target_bins, min_mass);
  bw.levels.resize(bw.partition.bins());
  std::vector<std::vector<double>> per_bin(bw.partition.bins());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto b = bw.partition.assign(z[i]);
    if (b) per_bin[*b].push_back(y[i]);
  }
  double obj = 0.0;
  long used = 0;
  for (std::size_t b = 0; b < per_bin.size(); ++b) {
    if (per_bin[b].empty()) {
      bw.levels[b] = 0.0;
      continue;
    }
    bw.levels[b] = fit_level(per_bin[b], cfg.loss);
    for (double v : per_bin[b]) obj += smoothed_pinball(v - bw.levels[b], cfg.loss);
    used += static_cast<long>(per_bin[b].size());
  }
  BoundaryModel m;
  m.family = Family::binwise;
  m.params = std::move(bw);
  m.meta = FitMeta{obj / static_cast<double>(used), 0, cfg.optimizer.seed};
  m.loss = cfg.loss;
  m.lambda_ridge = cfg.lambda_ridge;
  return m;
}

BoundaryModel fit_sigmoid(std::span<const double> z, std::span<const double> y,
                          const FitConfig& cfg) {
  cfg.loss.validate();
  cfg.optimizer.validate();
  require_curve_fittable(z, y, "fit_sigmoid");
  const std::size_t n = z.size();

  double z_mean = 0.0;
  for (double v : z) z_mean += v;
  z_mean /= static_cast<double>(n);
  // Centered compute keeps the offset parameter O(1), so the ridge shrinks
  // toward a mid-range sigmoid instead of dragging the inflection to z = 0.
  std::vector<double> zc(n);
  for (std::size_t i = 0; i < n; ++i) zc[i] = z[i] - z_mean;

  const std::vector<double> zvec(z.begin(), z.end());
  const std::vector<double> yvec(y.begin(), y.end());
  const double z_lo = *std::min_element(z.begin(), z.end());
  const double z_hi = *std::max_element(z.begin(), z.end());
  const double z_span = z_hi - z_lo;
  const double y_lo = clamp(percentile(yvec, 0.05), 0.01, 0.98);
  const double y_hi = clamp(percentile(yvec, 0.98), y_lo + 0.01, 0.995);
  const double ridge = cfg.lambda_ridge / static_cast<double>(n);

  // Unconstrained parameterization:
  //   floor = logistic(p0), rise = (1-floor) logistic(p1),
  //   slope = softplus(p2), centered offset = p3.
  auto objective = [&](std::span<const double> p, std::span<double> grad) {
    const double floor_v = logistic(p[0]);
    const double ratio = logistic(p[1]);
    const double rise_v = (1.0 - floor_v) * ratio;
    const double slope_v = softplus(p[2]);
    const double dslope = logistic(p[2]);
    const double dfloor = floor_v * (1.0 - floor_v);
    const double dratio = ratio * (1.0 - ratio);
    const double off = p[3];
    const double f = batch_objective_grad(
        zc, yvec, cfg.loss, 4,
        [&](std::size_t, double zi, double* jac) {
          const double s = logistic(off + slope_v * zi);
          const double q = floor_v + rise_v * s;
          const double band = rise_v * s * (1.0 - s);
          jac[0] = dfloor * (1.0 - ratio * s);  // via floor and the rise cap
          jac[1] = (1.0 - floor_v) * dratio * s;
          jac[2] = band * zi * dslope;
          jac[3] = band;
          return q;
        },
        grad);
    double reg = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      reg += p[j] * p[j];
      grad[j] += 2.0 * ridge * p[j];
    }
    return f + ridge * reg;
  };

  // Binwise-driven initialization values (used by the final restart).
  double bw_lo = y_lo, bw_hi = y_hi, bw_center = 0.0, bw_slope = 2.2 / (z_span + 1e-9);
  try {
    const auto bw = fit_binwise(z, y, 4, 1, cfg);
    const auto& p = std::get<BinwiseParams>(bw.params);
    if (p.partition.bins() >= 2) {
      bw_lo = clamp(p.levels.front(), 0.01, 0.97);
      bw_hi = clamp(p.levels.back(), bw_lo + 0.01, 0.995);
      const double m0 = p.partition.midpoint(0);
      const double m1 = p.partition.midpoint(p.partition.bins() - 1);
      if (m1 > m0) bw_slope = 4.4 / (m1 - m0);
      bw_center = 0.5 * (m0 + m1) - z_mean;
    }
  } catch (const ValidationError&) {
    // fall back to percentile-based defaults
  }

  Rng jitter(cfg.optimizer.seed);
  const int restarts = std::max(1, cfg.optimizer.restarts);
  auto make_init = [&](int k) {
    double center, slope0, lo0 = y_lo, hi0 = y_hi;
    if (k == restarts - 1 && restarts > 1) {
      center = bw_center;
      slope0 = bw_slope;
      lo0 = bw_lo;
      hi0 = bw_hi;
    } else {
      // Inflection spread over interior percentiles of the training z.
      const double q = static_cast<double>(k + 1) / static_cast<double>(restarts);
      center = percentile(zvec, q) - z_mean;
      slope0 = 4.4 / (z_span + 1e-9);
    }
    std::vector<double> p(4);
    p[0] = logit(lo0);
    p[1] = logit(clamp((hi0 - lo0) / (1.0 - lo0), 0.01, 0.99));
    p[2] = softplus_inv(slope0);
    p[3] = -slope0 * center;
    for (auto& v : p) v += 0.01 * jitter.normal();
    return p;
  };

  OptResult best = best_of_restarts(cfg.optimizer, make_init, objective);

  SigmoidParams out;
  out.floor = logistic(best.params[0]);
  out.rise = (1.0 - out.floor) * logistic(best.params[1]);
  out.slope = softplus(best.params[2]);
  out.offset = best.params[3] - out.slope * z_mean;  // back to raw z coordinates

  BoundaryModel m;
  m.family = Family::sigmoid;
  m.params = out;
  m.meta = FitMeta{best.objective, best.iterations, cfg.optimizer.seed};
  m.loss = cfg.loss;
  m.lambda_ridge = cfg.lambda_ridge;
  return m;
}

BoundaryModel fit_ispline(std::span<const double> z, std::span<const double> y,
                          int knot_count, int order, const FitConfig& cfg) {
  cfg.loss.validate();
  cfg.optimizer.validate();
  require_curve_fittable(z, y, "fit_ispline");
  if (knot_count < 1) throw ValidationError("fit_ispline: knot_count must be >= 1");
  const std::size_t n = z.size();

  const std::vector<double> zvec(z.begin(), z.end());
  const std::vector<double> yvec(y.begin(), y.end());
  const double z_lo = *std::min_element(z.begin(), z.end());
  const double z_hi = *std::max_element(z.begin(), z.end());
  std::vector<double> interior(static_cast<std::size_t>(knot_count));
  for (int i = 0; i < knot_count; ++i)
    interior[static_cast<std::size_t>(i)] =
        percentile(zvec, static_cast<double>(i + 1) / static_cast<double>(knot_count + 1));
  MonotoneSplineBasis basis(z_lo, z_hi, std::move(interior), order);
  const std::size_t nb = basis.size();
  const std::size_t np = nb + 1;
  if (np > kMaxFitParams) throw ValidationError("fit_ispline: too many basis functions");

  // Precomputed design: column j holds I_j over the data.
  std::vector<double> design(nb * n);
  for (std::size_t j = 0; j < nb; ++j)
    for (std::size_t i = 0; i < n; ++i) design[j * n + i] = basis.i(j, zvec[i]);

  const double ridge = cfg.lambda_ridge / static_cast<double>(n);
  std::vector<double> weights(nb);
  auto objective = [&](std::span<const double> p, std::span<double> grad) {
    for (std::size_t j = 0; j < nb; ++j) weights[j] = softplus(p[1 + j]);
    const double f = batch_objective_grad(
        zvec, yvec, cfg.loss, np,
        [&](std::size_t i, double, double* jac) {
          double g = p[0];
          for (std::size_t j = 0; j < nb; ++j) g += weights[j] * design[j * n + i];
          const double q = logistic(g);
          const double dq = q * (1.0 - q);
          jac[0] = dq;
          for (std::size_t j = 0; j < nb; ++j)
            jac[1 + j] = dq * design[j * n + i] * logistic(p[1 + j]);
          return q;
        },
        grad);
    double reg = 0.0;
    for (std::size_t j = 0; j < np; ++j) {
      reg += p[j] * p[j];
      grad[j] += 2.0 * ridge * p[j];
    }
    return f + ridge * reg;
  };

  const double y_lo = clamp(percentile(yvec, 0.05), 0.01, 0.98);
  const double y_hi = clamp(percentile(yvec, 0.98), y_lo + 0.01, 0.995);
  Rng jitter(cfg.optimizer.seed);
  auto make_init = [&](int k) {
    // Spread the initial total rise around the observed y range.
    const double stretch = 0.5 + 0.5 * static_cast<double>(k + 1);
    const double g_lo = logit(y_lo);
    const double g_hi = logit(y_hi);
    const double total = std::max(0.1, (g_hi - g_lo) * stretch);
    std::vector<double> p(np);
    p[0] = g_lo;
    for (std::size_t j = 0; j < nb; ++j)
      p[1 + j] = softplus_inv(total / static_cast<double>(nb));
    for (auto& v : p) v += 0.01 * jitter.normal();
    return p;
  };

  OptResult best = best_of_restarts(cfg.optimizer, make_init, objective);

  ISplineParams out{basis, best.params[0], {}};
  out.weights.resize(nb);
  for (std::size_t j = 0; j < nb; ++j) out.weights[j] = softplus(best.params[1 + j]);

  BoundaryModel m;
  m.family = Family::ispline;
  m.params = std::move(out);
  m.meta = FitMeta{best.objective, best.iterations, cfg.optimizer.seed};
  m.loss = cfg.loss;
  m.lambda_ridge = cfg.lambda_ridge;
  return m;
}

void OptimizerConfig::validate() const {
  if (max_iterations < 1) throw ValidationError("optimizer: max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw ValidationError("optimizer: tolerance must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("optimizer: learning_rate must be positive");
  if (patience < 1) throw ValidationError("optimizer: patience must be >= 1");
}

}  // namespace capbound
