#include "capbound/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "capbound/batch_objective.hpp"
#include "capbound/errors.hpp"
#include "capbound/linalg.hpp"
#include "capbound/rng.hpp"
#include "capbound/stats.hpp"

namespace capbound {

namespace {

double logit(double x) { return std::log(x / (1.0 - x)); }

}  // namespace

SizeTimeFit fit_size_time(std::span<const SizeTimePoint> data, Date cutoff,
                          double reference_log_params, const FitConfig& cfg) {
  cfg.loss.validate();
  cfg.optimizer.validate();
  long n_early = 0, n_late = 0;
  for (const auto& p : data) (p.date < cutoff ? n_early : n_late) += 1;
  if (n_early < 10 || n_late < 10)
    throw ValidationError("fit_size_time: need at least 10 points on each side of the cutoff");

  const std::size_t n = data.size();
  Date t_min = data[0].date, t_max = data[0].date;
  double x_sum = 0.0;
  for (const auto& p : data) {
    t_min = std::min(t_min, p.date);
    t_max = std::max(t_max, p.date);
    x_sum += p.log_params;
  }
  const double x_mean = x_sum / static_cast<double>(n);
  auto years = [&](Date d) {
    return static_cast<double>(d.days - t_min.days) / 365.0;
  };
  double s_sum = 0.0;
  for (const auto& p : data) s_sum += years(p.date);
  const double s_mean = s_sum / static_cast<double>(n);

  // Columns: centered log-params, centered years, late flag; y.
  std::vector<double> xc(n), sc(n), late(n), y(n), zdummy(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    xc[i] = data[i].log_params - x_mean;
    sc[i] = years(data[i].date) - s_mean;
    late[i] = data[i].date >= cutoff ? 1.0 : 0.0;
    y[i] = data[i].score;
  }

  const double ridge = cfg.lambda_ridge / static_cast<double>(n);
  auto objective = [&](std::span<const double> p, std::span<double> grad) {
    const double f = batch_objective_grad(
        zdummy, y, cfg.loss, 5,
        [&](std::size_t i, double, double* jac) {
          const double eta =
              p[0] + p[1] * xc[i] + p[2] * sc[i] + p[3] * late[i] + p[4] * xc[i] * late[i];
          const double q = logistic(eta);
          const double dq = q * (1.0 - q);
          jac[0] = dq;
          jac[1] = dq * xc[i];
          jac[2] = dq * sc[i];
          jac[3] = dq * late[i];
          jac[4] = dq * xc[i] * late[i];
          return q;
        },
        grad);
    double reg = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      reg += p[j] * p[j];
      grad[j] += 2.0 * ridge * p[j];
    }
    return f + ridge * reg;
  };

  double y_hi = percentile(y, 0.95);
  y_hi = std::min(0.99, std::max(0.01, y_hi));
  Rng jitter(cfg.optimizer.seed);
  OptResult best;
  best.objective = std::numeric_limits<double>::infinity();
  long total_iters = 0;
  const int restarts = std::max(1, cfg.optimizer.restarts);
  for (int k = 0; k < restarts; ++k) {
    std::vector<double> init(5, 0.0);
    init[0] = logit(y_hi);
    for (auto& v : init) v += 0.05 * jitter.normal();
    OptResult run = adam_minimize(objective, std::move(init), cfg.optimizer);
    total_iters += run.iterations;
    if (run.objective < best.objective) best = std::move(run);
  }

  SizeTimeFit fit;
  // Back to raw coordinates: eta = alpha + beta x + phi s + delta g + theta x g.
  const double b = best.params[1];
  const double phi = best.params[2];
  const double th = best.params[4];
  fit.params.beta = b;
  fit.params.phi_slope = phi;
  fit.params.theta = th;
  fit.params.delta = best.params[3] - th * x_mean;
  fit.params.alpha = best.params[0] - b * x_mean - phi * s_mean;
  fit.params.cutoff = cutoff;
  fit.objective = best.objective;
  fit.iterations = total_iters;
  fit.beta_early = fit.params.beta;
  fit.beta_late = fit.params.beta + fit.params.theta;
  fit.reference_log_params = reference_log_params;
  fit.t_early = t_min;
  fit.t_late = t_max;
  auto predict = [&](double x, Date t, double g) {
    const double s = years(t);
    return logistic(fit.params.alpha + fit.params.beta * x + fit.params.phi_slope * s +
                    fit.params.delta * g + fit.params.theta * x * g);
  };
  fit.q_ref_early = predict(reference_log_params, t_min, 0.0);
  fit.q_ref_late = predict(reference_log_params, t_max, 1.0);
  return fit;
}

nlohmann::ordered_json SizeTimeFit::to_json() const {
  nlohmann::ordered_json j;
  j["alpha"] = params.alpha;
  j["beta"] = params.beta;
  j["phi_slope"] = params.phi_slope;
  j["delta"] = params.delta;
  j["theta"] = params.theta;
  j["cutoff"] = format_date(params.cutoff);
  j["beta_early"] = beta_early;
  j["beta_late"] = beta_late;
  j["reference_log_params"] = reference_log_params;
  j["q_ref_early"] = q_ref_early;
  j["q_ref_late"] = q_ref_late;
  j["t_early"] = format_date(t_early);
  j["t_late"] = format_date(t_late);
  j["objective"] = objective;
  j["iterations"] = iterations;
  return j;
}

DominanceReport dominance_analysis(std::span<const DominancePoint> data,
                                   double size_cutoff) {
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data[a].date < data[b].date;
  });

  DominanceReport rep;
  double running = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < order.size()) {
    // Same-date group: small models update the running best first, so a
    // large model is compared against every small model up to and including
    // its own date.
    std::size_t j = i;
    while (j < order.size() && data[order[j]].date == data[order[i]].date) ++j;
    bool moved = false;
    for (std::size_t k = i; k < j; ++k) {
      const auto& p = data[order[k]];
      if (p.param_count <= size_cutoff) {
        ++rep.n_small;
        if (p.score > running) {
          running = p.score;
          moved = true;
        }
      }
    }
    if (moved) rep.small_boundary.emplace_back(data[order[i]].date, running);
    for (std::size_t k = i; k < j; ++k) {
      const auto& p = data[order[k]];
      if (p.param_count > size_cutoff) {
        ++rep.n_large;
        DominanceLabel label;
        label.model_id = p.model_id;
        label.date = p.date;
        label.score = p.score;
        label.small_best = running;
        label.dominated = std::isfinite(running) && p.score < running;
        rep.large_models.push_back(std::move(label));
      }
    }
    i = j;
  }
  rep.dominated_fraction =
      rep.n_large == 0
          ? 0.0
          : static_cast<double>(std::count_if(rep.large_models.begin(),
                                              rep.large_models.end(),
                                              [](const auto& l) { return l.dominated; })) /
                static_cast<double>(rep.n_large);
  return rep;
}

nlohmann::ordered_json DominanceReport::to_json() const {
  nlohmann::ordered_json j;
  j["n_large"] = n_large;
  j["n_small"] = n_small;
  j["dominated_fraction"] = dominated_fraction;
  nlohmann::ordered_json larges = nlohmann::ordered_json::array();
  for (const auto& l : large_models) {
    larges.push_back({{"model_id", l.model_id},
                      {"date", format_date(l.date)},
                      {"score", l.score},
                      {"small_best", std::isfinite(l.small_best) ? nlohmann::ordered_json(l.small_best)
                                                                 : nlohmann::ordered_json(nullptr)},
                      {"dominated", l.dominated}});
  }
  j["large_models"] = std::move(larges);
  nlohmann::ordered_json series = nlohmann::ordered_json::array();
  for (const auto& [date, value] : small_boundary)
    series.push_back({{"date", format_date(date)}, {"small_best", value}});
  j["small_boundary"] = std::move(series);
  return j;
}

ShiftTestResult contamination_shift_test(std::span<const ShiftPair> pairs,
                                         bool restrict_range) {
  ShiftTestResult res;
  std::vector<ShiftPair> usable;
  for (const auto& p : pairs) {
    if (p.reference <= 0.0 || p.reference >= 100.0 || p.target <= 0.0 ||
        p.target >= 100.0) {
      ++res.n_excluded;
      continue;
    }
    usable.push_back(p);
  }
  bool has_pre = false, has_post = false;
  for (const auto& p : usable) (p.post ? has_post : has_pre) = true;
  if (!has_pre || !has_post)
    throw ValidationError("contamination_shift_test: both release groups must be nonempty");

  if (restrict_range) {
    double pre_min = 100.0, pre_max = 0.0, post_min = 100.0, post_max = 0.0;
    for (const auto& p : usable) {
      auto& mn = p.post ? post_min : pre_min;
      auto& mx = p.post ? post_max : pre_max;
      mn = std::min(mn, p.reference);
      mx = std::max(mx, p.reference);
    }
    const Interval iv{std::max(pre_min, post_min), std::min(pre_max, post_max)};
    res.restricted_range = iv;
    std::erase_if(usable, [&](const ShiftPair& p) { return !iv.contains(p.reference); });
    has_pre = has_post = false;
    for (const auto& p : usable) (p.post ? has_post : has_pre) = true;
    if (!has_pre || !has_post)
      throw ValidationError(
          "contamination_shift_test: restriction left a release group empty");
  }

  const std::size_t n = usable.size();
  std::vector<double> x(n * 3), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i * 3 + 0] = 1.0;
    x[i * 3 + 1] = logit(0.01 * usable[i].reference);
    x[i * 3 + 2] = usable[i].post ? 1.0 : 0.0;
    y[i] = logit(0.01 * usable[i].target);
  }
  const OlsResult fit = ols(x, y, 3);
  res.alpha_hat = fit.coef[0];
  res.beta_hat = fit.coef[1];
  res.gamma_hat = fit.coef[2];
  res.gamma_se = fit.se[2];
  res.n = static_cast<long>(n);
  const double dof = static_cast<double>(n) - 3.0;
  if (res.gamma_se > 0.0) {
    res.t_stat = res.gamma_hat / res.gamma_se;
    res.p_value = student_t_two_sided_p(res.t_stat, dof);
    const double tq = student_t_quantile(0.975, dof);
    res.ci_lo = res.gamma_hat - tq * res.gamma_se;
    res.ci_hi = res.gamma_hat + tq * res.gamma_se;
  } else {
    // Zero residual variance: the relationship is exactly deterministic.
    res.t_stat = res.gamma_hat == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    res.p_value = res.gamma_hat == 0.0 ? 1.0 : 0.0;
    res.ci_lo = res.ci_hi = res.gamma_hat;
  }
  return res;
}

nlohmann::ordered_json ShiftTestResult::to_json() const {
  nlohmann::ordered_json j;
  j["alpha_hat"] = alpha_hat;
  j["beta_hat"] = beta_hat;
  j["gamma_hat"] = gamma_hat;
  j["gamma_se"] = gamma_se;
  j["t_stat"] = t_stat;
  j["p_value"] = p_value;
  j["n"] = n;
  j["n_excluded"] = n_excluded;
  j["ci_lo"] = ci_lo;
  j["ci_hi"] = ci_hi;
  if (restricted_range)
    j["restricted_range"] = {{"lo", restricted_range->lo}, {"hi", restricted_range->hi}};
  else
    j["restricted_range"] = nullptr;
  return j;
}

PcaBoundaryResult pca_boundary(const Dataset& d, const std::vector<std::string>& tasks,
                               int k, const FitConfig& cfg) {
  const std::size_t nt = tasks.size();
  if (k < 1 || static_cast<std::size_t>(k) > nt)
    throw ValidationError("pca_boundary: k must be in [1, #tasks]");

  std::vector<std::vector<double>> rows;  // task scores per complete record
  std::vector<double> z;
  for (const auto& r : d.records) {
    if (!r.has_compute()) continue;
    std::vector<double> row(nt);
    bool complete = true;
    for (std::size_t t = 0; t < nt; ++t) {
      const auto s = r.score(tasks[t]);
      if (!s) {
        complete = false;
        break;
      }
      row[t] = *s;
    }
    if (!complete) continue;
    rows.push_back(std::move(row));
    z.push_back(derive_log_compute(r));
  }
  const std::size_t n = rows.size();
  if (n < nt + 1)
    throw ValidationError("pca_boundary: need more complete records than tasks");

  // Standardize columns.
  std::vector<double> mean(nt, 0.0), sd(nt, 0.0);
  for (const auto& row : rows)
    for (std::size_t t = 0; t < nt; ++t) mean[t] += row[t];
  for (auto& m : mean) m /= static_cast<double>(n);
  for (const auto& row : rows)
    for (std::size_t t = 0; t < nt; ++t) {
      const double c = row[t] - mean[t];
      sd[t] += c * c;
    }
  for (std::size_t t = 0; t < nt; ++t) {
    sd[t] = std::sqrt(sd[t] / static_cast<double>(n - 1));
    if (!(sd[t] > 0.0))
      throw ValidationError("pca_boundary: task '" + tasks[t] + "' has zero variance");
  }
  for (auto& row : rows)
    for (std::size_t t = 0; t < nt; ++t) row[t] = (row[t] - mean[t]) / sd[t];

  // Correlation matrix and its spectrum.
  std::vector<double> cov(nt * nt, 0.0);
  for (const auto& row : rows)
    for (std::size_t a = 0; a < nt; ++a)
      for (std::size_t b = 0; b < nt; ++b) cov[a * nt + b] += row[a] * row[b];
  for (auto& vpair : cov) vpair /= static_cast<double>(n - 1);
  EigenResult eig = jacobi_eigen(cov, nt);

  double total = 0.0;
  for (double v : eig.values) total += std::max(0.0, v);

  PcaBoundaryResult res;
  res.n_records = static_cast<long>(n);
  for (int c = 0; c < k; ++c) {
    auto vec = eig.vectors[static_cast<std::size_t>(c)];
    double load_sum = 0.0;
    for (double v : vec) load_sum += v;
    if (load_sum < 0.0)
      for (auto& v : vec) v = -v;  // orient so "more capable" scores project up
    res.explained_variance.push_back(std::max(0.0, eig.values[static_cast<std::size_t>(c)]) /
                                     total);
    std::vector<double> proj(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < nt; ++t) proj[i] += rows[i][t] * vec[t];
    const auto [mn, mx] = std::minmax_element(proj.begin(), proj.end());
    std::vector<double> scaled(n, 0.5);
    if (*mx > *mn)
      for (std::size_t i = 0; i < n; ++i) scaled[i] = (proj[i] - *mn) / (*mx - *mn);
    res.components.push_back(std::move(vec));
    res.boundaries.push_back(fit_sigmoid(z, scaled, cfg));
  }
  return res;
}

nlohmann::ordered_json PcaBoundaryResult::to_json() const {
  nlohmann::ordered_json j;
  j["n_records"] = n_records;
  j["explained_variance"] = explained_variance;
  j["components"] = components;
  nlohmann::ordered_json fits = nlohmann::ordered_json::array();
  for (const auto& b : boundaries) fits.push_back(b.to_json());
  j["boundaries"] = std::move(fits);
  return j;
}

}  // namespace capbound
