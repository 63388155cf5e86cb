// capbound: estimate compute-to-score capability boundaries, validate them
// across chronological splits, plan evaluation budgets, and run saturation /
// contamination diagnostics. Every run writes report.json, report.csv and
// manifest.json into its own output directory; identical inputs and
// configuration reproduce the reports byte-for-byte.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "capbound/design.hpp"
#include "capbound/diagnostics.hpp"
#include "capbound/errors.hpp"
#include "capbound/evaluation.hpp"
#include "capbound/manifest.hpp"
#include "capbound/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

using namespace capbound;

struct OutputOptions {
  std::string out_dir;   // explicit directory (used as-is)
  std::string out_root;  // root for <command>/<timestamp>-<digest>/
};

void add_output_options(CLI::App* cmd, OutputOptions& out) {
  cmd->add_option("--out", out.out_dir, "Write outputs into this exact directory");
  cmd->add_option("--out-root", out.out_root,
                  "Root for out/<command>/<timestamp>-<digest>/ (default $CAPBOUND_OUT or ./out)");
}

fs::path resolve_run_dir(const OutputOptions& opt, const RunManifest& manifest) {
  if (!opt.out_dir.empty()) {
    fs::create_directories(opt.out_dir);
    return opt.out_dir;
  }
  fs::path root = opt.out_root;
  if (root.empty()) {
    if (const char* env = std::getenv("CAPBOUND_OUT")) root = env;
    else root = "out";
  }
  return make_run_dir(root, manifest.command, manifest.run_digest().substr(0, 8));
}

struct FitOptions {
  double tau = 0.98;
  double kappa = 50.0;
  double lambda_ridge = 1e-3;
  std::uint64_t seed = 0;
  int iterations = 2000;
  int restarts = 5;
  double learning_rate = 0.05;
};

void add_fit_options(CLI::App* cmd, FitOptions& fo) {
  cmd->add_option("--tau", fo.tau, "Quantile level")->capture_default_str();
  cmd->add_option("--kappa", fo.kappa, "Pinball smoothing sharpness")->capture_default_str();
  cmd->add_option("--lambda", fo.lambda_ridge, "Ridge weight (sum-form objective)")
      ->capture_default_str();
  cmd->add_option("--seed", fo.seed, "Optimizer seed")->capture_default_str();
  cmd->add_option("--iterations", fo.iterations, "Max optimizer iterations")
      ->capture_default_str();
  cmd->add_option("--restarts", fo.restarts, "Optimizer restarts")->capture_default_str();
  cmd->add_option("--learning-rate", fo.learning_rate, "Optimizer step size")
      ->capture_default_str();
}

FitConfig to_fit_config(const FitOptions& fo) {
  FitConfig cfg;
  cfg.loss.tau = fo.tau;
  cfg.loss.kappa = fo.kappa;
  cfg.lambda_ridge = fo.lambda_ridge;
  cfg.optimizer.seed = fo.seed;
  cfg.optimizer.max_iterations = fo.iterations;
  cfg.optimizer.restarts = fo.restarts;
  cfg.optimizer.learning_rate = fo.learning_rate;
  return cfg;
}

ordered_json fit_options_json(const FitOptions& fo) {
  return ordered_json{{"tau", fo.tau},
                      {"kappa", fo.kappa},
                      {"lambda_ridge", fo.lambda_ridge},
                      {"seed", fo.seed},
                      {"iterations", fo.iterations},
                      {"restarts", fo.restarts},
                      {"learning_rate", fo.learning_rate}};
}

std::vector<double> parse_double_list(const std::string& csv, const char* what) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ValidationError(std::string(what) + ": '" + item + "' is not a number");
    }
  }
  return out;
}

PeriodPartition parse_cutoffs(const std::string& csv) {
  std::vector<Date> cutoffs;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) cutoffs.push_back(parse_date(item));
  }
  return PeriodPartition::from_cutoffs(std::move(cutoffs));
}

void require_task(const Dataset& data, const std::string& task) {
  if (data.has_task(task)) return;
  std::string available;
  for (const auto& t : data.task_names) available += (available.empty() ? "" : ", ") + t;
  throw ValidationError("task '" + task + "' not in dataset (available: " + available + ")");
}

std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void finish_run(RunManifest& manifest, const fs::path& dir, const ordered_json& report,
                const std::string& report_csv) {
  const auto report_json_path = dir / "report.json";
  const auto report_csv_path = dir / "report.csv";
  write_json(report_json_path, report);
  write_text(report_csv_path, report_csv);
  manifest.outputs.push_back(report_json_path.string());
  manifest.outputs.push_back(report_csv_path.string());
  manifest.created = utc_timestamp();
  manifest.write(dir / "manifest.json");
  std::cout << dir.string() << "\n";
}

// ---------------------------------------------------------------- fit ----

struct FitArgs {
  std::string data_path;
  std::string task;
  std::string family = "sigmoid";
  FitOptions fo;
  int bins = 8;
  int min_mass = 10;
  int knots = 3;
  int order = 3;
  std::string predict_at;
  OutputOptions out;
};

int run_fit(const FitArgs& a) {
  const Dataset data = load_records(a.data_path);
  require_task(data, a.task);
  std::vector<double> z, y;
  data.task_points(a.task, z, y);
  if (z.empty()) throw ValidationError("no records carry both compute and '" + a.task + "'");
  const FitConfig cfg = to_fit_config(a.fo);
  const Family family = family_from_name(a.family);

  BoundaryModel model = [&]() {
    switch (family) {
      case Family::constant: return fit_constant(y, cfg);
      case Family::binwise: return fit_binwise(z, y, a.bins, a.min_mass, cfg);
      case Family::sigmoid: return fit_sigmoid(z, y, cfg);
      case Family::ispline: return fit_ispline(z, y, a.knots, a.order, cfg);
    }
    throw ValidationError("unknown family");
  }();

  RunManifest manifest;
  manifest.command = "fit";
  manifest.config = ordered_json{{"data", a.data_path},
                                 {"task", a.task},
                                 {"family", a.family},
                                 {"bins", a.bins},
                                 {"min_mass", a.min_mass},
                                 {"knots", a.knots},
                                 {"order", a.order},
                                 {"predict_at", a.predict_at},
                                 {"fit", fit_options_json(a.fo)}};
  manifest.add_input(a.data_path);
  const fs::path dir = resolve_run_dir(a.out, manifest);

  ordered_json report;
  report["task"] = a.task;
  report["n_points"] = z.size();
  report["model"] = model.to_json();
  std::string csv = "z,prediction\n";
  if (!a.predict_at.empty()) {
    ordered_json preds = ordered_json::array();
    std::cout << "z,prediction\n";
    for (double zq : parse_double_list(a.predict_at, "--predict-at")) {
      const auto p = model.predict_checked(zq);
      preds.push_back({{"z", zq},
                       {"prediction", p ? ordered_json(*p) : ordered_json(nullptr)}});
      csv += csv_number(zq) + "," + (p ? csv_number(*p) : "") + "\n";
      std::cout << csv_number(zq) << "," << (p ? csv_number(*p) : "out-of-range") << "\n";
    }
    report["predictions"] = std::move(preds);
  }
  const auto model_path = dir / "model.json";
  write_json(model_path, model.to_json());
  manifest.outputs.push_back(model_path.string());
  finish_run(manifest, dir, report, csv);
  return 0;
}

// ----------------------------------------------------------- evaluate ----

struct EvaluateArgs {
  std::string data_path;
  std::vector<std::string> tasks;
  std::string cutoffs;
  std::string families = "constant,binwise,sigmoid,ispline";
  FitOptions fo;
  int bins = 8;
  int min_mass = 10;
  int knots = 3;
  int order = 3;
  OutputOptions out;
};

RollingConfig to_rolling_config(const EvaluateArgs& a) {
  RollingConfig cfg;
  cfg.families.clear();
  std::stringstream ss(a.families);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) cfg.families.push_back(family_from_name(item));
  }
  if (cfg.families.empty()) throw ValidationError("no families requested");
  cfg.fit = to_fit_config(a.fo);
  cfg.target_bins = a.bins;
  cfg.min_mass = a.min_mass;
  cfg.knot_count = a.knots;
  cfg.spline_order = a.order;
  return cfg;
}

int run_evaluate(const EvaluateArgs& a) {
  const Dataset data = load_records(a.data_path);
  const RollingConfig cfg = to_rolling_config(a);
  std::vector<std::string> tasks = a.tasks;
  if (tasks.empty()) tasks = data.task_names;
  for (const auto& task : tasks) require_task(data, task);

  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.config = ordered_json{{"data", a.data_path},
                                 {"tasks", tasks},
                                 {"cutoffs", a.cutoffs},
                                 {"families", a.families},
                                 {"bins", a.bins},
                                 {"min_mass", a.min_mass},
                                 {"knots", a.knots},
                                 {"order", a.order},
                                 {"fit", fit_options_json(a.fo)}};
  manifest.add_input(a.data_path);
  const fs::path dir = resolve_run_dir(a.out, manifest);

  ordered_json report;
  std::string csv;
  if (a.cutoffs.empty()) {
    // Single period: in-distribution metrics only.
    ordered_json per_task = ordered_json::array();
    csv = "task,family,scope,bin,n,tau_hat,deviation,mean_pinball\n";
    for (const auto& task : tasks) {
      std::vector<double> z, y;
      data.task_points(task, z, y);
      if (z.empty()) continue;
      const BinPartition bins = build_bins(z, cfg.target_bins, cfg.min_mass);
      const Interval range{*std::min_element(z.begin(), z.end()),
                           *std::max_element(z.begin(), z.end())};
      ordered_json fams = ordered_json::array();
      for (Family f : cfg.families) {
        ordered_json fj;
        fj["family"] = family_name(f);
        try {
          BoundaryModel model = [&]() {
            switch (f) {
              case Family::constant: return fit_constant(y, cfg.fit);
              case Family::binwise:
                return fit_binwise(z, y, cfg.target_bins, cfg.min_mass, cfg.fit);
              case Family::sigmoid: return fit_sigmoid(z, y, cfg.fit);
              case Family::ispline:
                return fit_ispline(z, y, cfg.knot_count, cfg.spline_order, cfg.fit);
            }
            throw ValidationError("unknown family");
          }();
          const EvalReport rep = evaluate_scope(model, z, y, bins, cfg.fit.loss,
                                                Scope::in_distribution, range);
          fj["skipped"] = false;
          fj["id"] = rep.to_json();
          fj["ood"] = nullptr;
          for (const auto& c : rep.coverage_by_bin) {
            csv += task + "," + family_name(f) + ",in_distribution," +
                   std::to_string(c.bin) + "," + std::to_string(c.n) + "," +
                   csv_number(c.tau_hat) + "," + csv_number(c.deviation) + "," +
                   csv_number(rep.mean_pinball) + "\n";
          }
        } catch (const ValidationError& e) {
          fj["skipped"] = true;
          fj["skip_reason"] = e.what();
        }
        fams.push_back(std::move(fj));
      }
      per_task.push_back(ordered_json{{"task", task}, {"families", std::move(fams)}});
    }
    report["mode"] = "single_period";
    report["tasks"] = std::move(per_task);
  } else {
    const PeriodPartition periods = parse_cutoffs(a.cutoffs);
    ordered_json per_task = ordered_json::array();
    std::vector<RollingResult> results;
    for (const auto& task : tasks) {
      results.push_back(rolling_protocol(data, periods, task, cfg));
      per_task.push_back(results.back().to_json());
      csv += results.back().to_csv();
    }
    report["mode"] = "rolling";
    report["tasks"] = std::move(per_task);

    // Table-style averages across tasks and splits per family.
    ordered_json cross = ordered_json::array();
    for (Family f : cfg.families) {
      double idp = 0, oodp = 0, idc = 0, oodc = 0;
      long n_id = 0, n_ood = 0;
      for (const auto& rr : results) {
        for (const auto& agg : rr.aggregates) {
          if (agg.family != f) continue;
          if (agg.id_pinball) {
            idp += *agg.id_pinball;
            idc += *agg.id_calibration;
            ++n_id;
          }
          if (agg.ood_pinball) {
            oodp += *agg.ood_pinball;
            oodc += *agg.ood_calibration;
            ++n_ood;
          }
        }
      }
      ordered_json row;
      row["family"] = family_name(f);
      row["id_pinball"] = n_id ? ordered_json(idp / n_id) : ordered_json(nullptr);
      row["ood_pinball"] = n_ood ? ordered_json(oodp / n_ood) : ordered_json(nullptr);
      row["id_calibration"] = n_id ? ordered_json(idc / n_id) : ordered_json(nullptr);
      row["ood_calibration"] = n_ood ? ordered_json(oodc / n_ood) : ordered_json(nullptr);
      cross.push_back(std::move(row));
    }
    report["cross_task_averages"] = std::move(cross);
  }
  finish_run(manifest, dir, report, csv);
  return 0;
}

// -------------------------------------------------------------- sweep ----

struct SweepArgs {
  std::string data_path;
  std::string task;
  std::string cutoffs;
  std::string kappa_grid = "20,50,100,200,1000";
  std::string lambda_grid = "1e-4,1e-3,1e-2,1e-1";
  FitOptions fo;
  int bins = 8;
  int min_mass = 10;
  OutputOptions out;
};

int run_sweep(const SweepArgs& a) {
  const Dataset data = load_records(a.data_path);
  require_task(data, a.task);
  const PeriodPartition periods = parse_cutoffs(a.cutoffs);
  RollingConfig cfg;
  cfg.fit = to_fit_config(a.fo);
  cfg.target_bins = a.bins;
  cfg.min_mass = a.min_mass;
  const auto kappas = parse_double_list(a.kappa_grid, "--kappa-grid");
  const auto lambdas = parse_double_list(a.lambda_grid, "--lambda-grid");

  RunManifest manifest;
  manifest.command = "sweep";
  manifest.config = ordered_json{{"data", a.data_path},
                                 {"task", a.task},
                                 {"cutoffs", a.cutoffs},
                                 {"kappa_grid", kappas},
                                 {"lambda_grid", lambdas},
                                 {"bins", a.bins},
                                 {"min_mass", a.min_mass},
                                 {"fit", fit_options_json(a.fo)}};
  manifest.add_input(a.data_path);
  const fs::path dir = resolve_run_dir(a.out, manifest);

  const auto cells = sensitivity_sweep(data, periods, a.task, kappas, lambdas, cfg);
  ordered_json rows = ordered_json::array();
  std::string csv = "kappa,lambda,ood_pinball,ood_abs_coverage\n";
  for (const auto& c : cells) {
    rows.push_back(
        {{"kappa", c.kappa},
         {"lambda", c.lambda},
         {"ood_pinball", c.ood_pinball ? ordered_json(*c.ood_pinball) : ordered_json(nullptr)},
         {"ood_abs_coverage",
          c.ood_abs_coverage ? ordered_json(*c.ood_abs_coverage) : ordered_json(nullptr)}});
    csv += csv_number(c.kappa) + "," + csv_number(c.lambda) + "," +
           (c.ood_pinball ? csv_number(*c.ood_pinball) : "") + "," +
           (c.ood_abs_coverage ? csv_number(*c.ood_abs_coverage) : "") + "\n";
  }
  ordered_json report;
  report["task"] = a.task;
  report["cells"] = std::move(rows);
  finish_run(manifest, dir, report, csv);
  return 0;
}

// ------------------------------------------------------------- design ----

struct DesignArgs {
  std::string pool_path;
  std::string theta0_path;
  double alpha = 20.0;
  double lambda_balance = -1.0;  // negative = auto
  double epsilon = 0.01;
  double eta = 1e-9;
  int bins = 4;
  int min_mass = 1;
  int polish = 25;
  std::string weights;
  OutputOptions out;
};

// The candidate pool may arrive either as the three-column design schema
// (model_id,pretraining_flops,param_count) or as a full records file.
void load_pool(const std::string& path, std::vector<std::string>& ids,
               std::vector<double>& z, std::vector<double>& cost) {
  std::ifstream probe(path);
  std::string header;
  std::getline(probe, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header == "model_id,pretraining_flops,param_count") {
    std::string line;
    std::size_t row = 1;
    while (std::getline(probe, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string id, flops_s, params_s;
      if (!std::getline(ss, id, ',') || !std::getline(ss, flops_s, ',') ||
          !std::getline(ss, params_s, ','))
        throw ValidationError("pool row " + std::to_string(row) + ": expected 3 cells");
      double flops = 0.0, params = 0.0;
      try {
        flops = std::stod(flops_s);
        params = std::stod(params_s);
      } catch (const std::exception&) {
        throw ValidationError("pool row " + std::to_string(row) + ": malformed number");
      }
      if (!(flops > 0.0) || !(params > 0.0))
        throw ValidationError("pool row " + std::to_string(row) +
                              ": flops and params must be positive");
      ids.push_back(id);
      z.push_back(std::log10(flops));
      cost.push_back(params);
      ++row;
    }
    return;
  }
  const Dataset data = load_records(path);
  for (const auto& r : data.records) {
    if (!r.has_compute() || !r.param_count) continue;
    ids.push_back(r.model_id);
    z.push_back(derive_log_compute(r));
    cost.push_back(*r.param_count);
  }
}

int run_design(const DesignArgs& a) {
  std::vector<std::string> ids;
  std::vector<double> z, cost;
  load_pool(a.pool_path, ids, z, cost);
  if (ids.empty()) throw ValidationError("design: empty candidate pool");
  {
    std::set<std::string> unique(ids.begin(), ids.end());
    if (unique.size() != ids.size())
      throw ValidationError("design: duplicate model_id in the candidate pool");
  }

  std::ifstream tf(a.theta0_path);
  if (!tf) throw ValidationError("cannot open '" + a.theta0_path + "'");
  nlohmann::json theta_doc;
  tf >> theta_doc;
  const BoundaryModel theta_model = BoundaryModel::from_json(theta_doc);
  const SigmoidParams theta0 = theta_model.sigmoid_params();

  DesignConfig cfg;
  cfg.alpha = a.alpha;
  if (a.lambda_balance >= 0.0) cfg.lambda_balance = a.lambda_balance;
  cfg.epsilon_balance = a.epsilon;
  cfg.eta_ridge = a.eta;
  cfg.polish_exchanges = a.polish;
  if (!a.weights.empty()) cfg.bin_weights = parse_double_list(a.weights, "--weights");

  const BinPartition bins = build_bins(z, a.bins, a.min_mass);
  const auto pool = make_candidates(ids, z, cost, bins);

  RunManifest manifest;
  manifest.command = "design";
  manifest.config = ordered_json{{"pool", a.pool_path},
                                 {"theta0", a.theta0_path},
                                 {"alpha", a.alpha},
                                 {"lambda_balance", a.lambda_balance},
                                 {"epsilon", a.epsilon},
                                 {"eta", a.eta},
                                 {"bins", a.bins},
                                 {"min_mass", a.min_mass},
                                 {"polish", a.polish},
                                 {"weights", a.weights}};
  manifest.add_input(a.pool_path);
  manifest.add_input(a.theta0_path);
  const fs::path dir = resolve_run_dir(a.out, manifest);

  const DesignSelection sel = greedy_select(pool, theta0, cfg, bins);
  ordered_json report = sel.to_json();
  report["bins"] = bins.to_json();
  std::string csv = "model_id,z,cost,bin\n";
  for (const auto& id : sel.selected) {
    const auto it = std::find(ids.begin(), ids.end(), id);
    const std::size_t i = static_cast<std::size_t>(it - ids.begin());
    csv += id + "," + csv_number(z[i]) + "," + csv_number(cost[i]) + "," +
           std::to_string(pool[i].bin) + "\n";
  }
  finish_run(manifest, dir, report, csv);
  return 0;
}

// ----------------------------------------------------------- diagnose ----

struct DiagnoseCommon {
  std::string data_path;
  FitOptions fo;
  OutputOptions out;
};

int run_size_time(const DiagnoseCommon& common, const std::string& task,
                  const std::string& cutoff_str, double size_cutoff,
                  const std::string& log_base) {
  const Dataset data = load_records(common.data_path);
  require_task(data, task);
  const Date cutoff = parse_date(cutoff_str);
  const bool natural = log_base == "e";
  if (!natural && log_base != "10")
    throw ValidationError("--log-base must be 'e' or '10'");
  std::vector<SizeTimePoint> points;
  for (const auto& r : data.records) {
    if (!r.param_count) continue;
    const auto s = r.score(task);
    if (!s) continue;
    const double lp = natural ? std::log(*r.param_count) : std::log10(*r.param_count);
    points.push_back(SizeTimePoint{lp, r.release_date, *s});
  }
  const double ref = natural ? std::log(size_cutoff) : std::log10(size_cutoff);
  const SizeTimeFit fit = fit_size_time(points, cutoff, ref, to_fit_config(common.fo));

  RunManifest manifest;
  manifest.command = "diagnose-size-time";
  manifest.config = ordered_json{{"data", common.data_path},
                                 {"task", task},
                                 {"cutoff", cutoff_str},
                                 {"size_cutoff", size_cutoff},
                                 {"log_base", log_base},
                                 {"fit", fit_options_json(common.fo)}};
  manifest.add_input(common.data_path);
  const fs::path dir = resolve_run_dir(common.out, manifest);

  ordered_json report = fit.to_json();
  report["task"] = task;
  std::string csv =
      "beta,beta_late,q_ref_early,q_ref_late\n" + csv_number(fit.beta_early) + "," +
      csv_number(fit.beta_late) + "," + csv_number(fit.q_ref_early) + "," +
      csv_number(fit.q_ref_late) + "\n";
  finish_run(manifest, dir, report, csv);
  return 0;
}

int run_dominance(const DiagnoseCommon& common, const std::string& task,
                  double size_cutoff) {
  const Dataset data = load_records(common.data_path);
  require_task(data, task);
  std::vector<DominancePoint> points;
  for (const auto& r : data.records) {
    if (!r.param_count) continue;
    const auto s = r.score(task);
    if (!s) continue;
    points.push_back(DominancePoint{r.model_id, *r.param_count, r.release_date, *s});
  }
  const DominanceReport rep = dominance_analysis(points, size_cutoff);

  RunManifest manifest;
  manifest.command = "diagnose-dominance";
  manifest.config = ordered_json{{"data", common.data_path},
                                 {"task", task},
                                 {"size_cutoff", size_cutoff}};
  manifest.add_input(common.data_path);
  const fs::path dir = resolve_run_dir(common.out, manifest);

  ordered_json report = rep.to_json();
  report["task"] = task;
  std::string csv = "model_id,date,score,small_best,dominated\n";
  for (const auto& l : rep.large_models) {
    csv += l.model_id + "," + format_date(l.date) + "," + csv_number(l.score) + "," +
           (std::isfinite(l.small_best) ? csv_number(l.small_best) : "") + "," +
           (l.dominated ? "1" : "0") + "\n";
  }
  finish_run(manifest, dir, report, csv);
  return 0;
}

int run_shift(const DiagnoseCommon& common, const std::string& reference_task,
              const std::string& target_task, const std::string& post_date_str,
              bool restrict_range) {
  const Dataset data = load_records(common.data_path);
  require_task(data, reference_task);
  require_task(data, target_task);
  const Date post_date = parse_date(post_date_str);
  std::vector<ShiftPair> pairs;
  for (const auto& r : data.records) {
    const auto m = r.score(reference_task);
    const auto y = r.score(target_task);
    if (!m || !y) continue;
    // Stored scores are fractions; the regression operates on percentages.
    pairs.push_back(ShiftPair{*m * 100.0, *y * 100.0, r.release_date >= post_date});
  }
  const ShiftTestResult res = contamination_shift_test(pairs, restrict_range);

  RunManifest manifest;
  manifest.command = "diagnose-shift";
  manifest.config = ordered_json{{"data", common.data_path},
                                 {"reference_task", reference_task},
                                 {"target_task", target_task},
                                 {"post_date", post_date_str},
                                 {"restrict", restrict_range}};
  manifest.add_input(common.data_path);
  const fs::path dir = resolve_run_dir(common.out, manifest);

  ordered_json report = res.to_json();
  report["reference_task"] = reference_task;
  report["target_task"] = target_task;
  std::string csv = "alpha_hat,beta_hat,gamma_hat,gamma_se,t_stat,p_value,n\n" +
                    csv_number(res.alpha_hat) + "," + csv_number(res.beta_hat) + "," +
                    csv_number(res.gamma_hat) + "," + csv_number(res.gamma_se) + "," +
                    csv_number(res.t_stat) + "," + csv_number(res.p_value) + "," +
                    std::to_string(res.n) + "\n";
  finish_run(manifest, dir, report, csv);
  return 0;
}

int run_pca(const DiagnoseCommon& common, std::vector<std::string> tasks, int k) {
  const Dataset data = load_records(common.data_path);
  if (tasks.empty()) tasks = data.task_names;
  for (const auto& t : tasks) require_task(data, t);
  const PcaBoundaryResult res = pca_boundary(data, tasks, k, to_fit_config(common.fo));

  RunManifest manifest;
  manifest.command = "diagnose-pca";
  manifest.config = ordered_json{{"data", common.data_path},
                                 {"tasks", tasks},
                                 {"k", k},
                                 {"fit", fit_options_json(common.fo)}};
  manifest.add_input(common.data_path);
  const fs::path dir = resolve_run_dir(common.out, manifest);

  ordered_json report = res.to_json();
  report["tasks"] = tasks;
  std::string csv = "component,explained_variance\n";
  for (std::size_t c = 0; c < res.explained_variance.size(); ++c)
    csv += std::to_string(c + 1) + "," + csv_number(res.explained_variance[c]) + "\n";
  finish_run(manifest, dir, report, csv);
  return 0;
}

// ----------------------------------------------------------- simulate ----

struct SimulateArgs {
  long n = 1000;
  std::uint64_t seed = 0;
  double z_lo = 18.0, z_hi = 26.0;
  double floor = 0.08, rise = 0.8, offset = -22.0, slope = 1.0;
  double exceed_prob = 0.02;
  std::string gap_law = "beta";
  double gap_min = 0.03, gap_max = 0.40;
  double bump_max = 0.02;
  std::string drift;
  std::string task = "synthetic";
  OutputOptions out;
};

int run_simulate(const SimulateArgs& a) {
  GeneratorSpec spec;
  spec.truth = SigmoidParams{a.floor, a.rise, a.offset, a.slope};
  spec.z_lo = a.z_lo;
  spec.z_hi = a.z_hi;
  spec.n = a.n;
  spec.exceed_prob = a.exceed_prob;
  spec.bump_max = a.bump_max;
  spec.seed = a.seed;
  spec.task = a.task;
  if (a.gap_law == "uniform") spec.gap = GapLaw::uniform(a.gap_min, a.gap_max);
  else if (a.gap_law == "beta") spec.gap = GapLaw::beta();
  else throw ValidationError("--gap-law must be 'uniform' or 'beta'");
  if (!a.drift.empty()) spec.drift = parse_double_list(a.drift, "--drift");

  const SynthData synth = generate(spec);

  RunManifest manifest;
  manifest.command = "simulate";
  manifest.config = ordered_json{{"n", a.n},
                                 {"seed", a.seed},
                                 {"z_lo", a.z_lo},
                                 {"z_hi", a.z_hi},
                                 {"floor", a.floor},
                                 {"rise", a.rise},
                                 {"offset", a.offset},
                                 {"slope", a.slope},
                                 {"exceed_prob", a.exceed_prob},
                                 {"gap_law", a.gap_law},
                                 {"gap_min", a.gap_min},
                                 {"gap_max", a.gap_max},
                                 {"bump_max", a.bump_max},
                                 {"drift", a.drift},
                                 {"task", a.task}};
  const fs::path dir = resolve_run_dir(a.out, manifest);

  const auto data_path = dir / "dataset.csv";
  save_csv(synth.dataset, data_path);
  const auto truth_path = dir / "truth.json";
  write_json(truth_path, synth.truth_json());
  manifest.outputs.push_back(data_path.string());
  manifest.outputs.push_back(truth_path.string());

  ordered_json report = synth.truth_json();
  report["n"] = synth.dataset.size();
  std::string csv = "n,periods\n" + std::to_string(synth.dataset.size()) + "," +
                    std::to_string(synth.period_offsets.size()) + "\n";
  finish_run(manifest, dir, report, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capability boundary estimation, budget planning and diagnostics"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a boundary estimator to one task");
  fit_cmd->add_option("--data", fit_args.data_path, "Records CSV/JSON")->required();
  fit_cmd->add_option("--task", fit_args.task, "Task name")->required();
  fit_cmd->add_option("--family", fit_args.family, "constant|binwise|sigmoid|ispline")
      ->capture_default_str();
  fit_cmd->add_option("--bins", fit_args.bins, "Binwise target bins")->capture_default_str();
  fit_cmd->add_option("--min-mass", fit_args.min_mass, "Minimum bin mass")
      ->capture_default_str();
  fit_cmd->add_option("--knots", fit_args.knots, "I-spline interior knots")
      ->capture_default_str();
  fit_cmd->add_option("--order", fit_args.order, "I-spline order")->capture_default_str();
  fit_cmd->add_option("--predict-at", fit_args.predict_at,
                      "Comma-separated z values to tabulate");
  add_fit_options(fit_cmd, fit_args.fo);
  add_output_options(fit_cmd, fit_args.out);

  EvaluateArgs eval_args;
  auto* eval_cmd =
      app.add_subcommand("evaluate", "Metrics and the rolling chronological protocol");
  eval_cmd->add_option("--data", eval_args.data_path, "Records CSV/JSON")->required();
  eval_cmd->add_option("--task", eval_args.tasks, "Task name (repeatable; default all)");
  eval_cmd->add_option("--cutoffs", eval_args.cutoffs,
                       "Comma-separated period cutoff dates (YYYY-MM-DD)");
  eval_cmd->add_option("--families", eval_args.families, "Comma-separated families")
      ->capture_default_str();
  eval_cmd->add_option("--bins", eval_args.bins, "Coverage bins")->capture_default_str();
  eval_cmd->add_option("--min-mass", eval_args.min_mass, "Minimum bin mass")
      ->capture_default_str();
  eval_cmd->add_option("--knots", eval_args.knots, "I-spline interior knots")
      ->capture_default_str();
  eval_cmd->add_option("--order", eval_args.order, "I-spline order")->capture_default_str();
  add_fit_options(eval_cmd, eval_args.fo);
  add_output_options(eval_cmd, eval_args.out);

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Kappa/lambda sensitivity grid");
  sweep_cmd->add_option("--data", sweep_args.data_path, "Records CSV/JSON")->required();
  sweep_cmd->add_option("--task", sweep_args.task, "Task name")->required();
  sweep_cmd->add_option("--cutoffs", sweep_args.cutoffs, "Period cutoff dates")->required();
  sweep_cmd->add_option("--kappa-grid", sweep_args.kappa_grid, "Comma-separated kappas")
      ->capture_default_str();
  sweep_cmd->add_option("--lambda-grid", sweep_args.lambda_grid, "Comma-separated lambdas")
      ->capture_default_str();
  sweep_cmd->add_option("--bins", sweep_args.bins, "Coverage bins")->capture_default_str();
  sweep_cmd->add_option("--min-mass", sweep_args.min_mass, "Minimum bin mass")
      ->capture_default_str();
  add_fit_options(sweep_cmd, sweep_args.fo);
  add_output_options(sweep_cmd, sweep_args.out);

  DesignArgs design_args;
  auto* design_cmd =
      app.add_subcommand("design", "Budget-constrained balanced I-optimal selection");
  design_cmd->add_option("--pool", design_args.pool_path,
                         "Candidate pool CSV (design schema or records schema)")
      ->required();
  design_cmd->add_option("--theta0", design_args.theta0_path, "Nominal sigmoid model JSON")
      ->required();
  design_cmd->add_option("--alpha", design_args.alpha, "Budget percent of pool cost")
      ->capture_default_str();
  design_cmd->add_option("--lambda-balance", design_args.lambda_balance,
                         "Balance weight (negative = auto-scale)")
      ->capture_default_str();
  design_cmd->add_option("--epsilon", design_args.epsilon, "Balance epsilon")
      ->capture_default_str();
  design_cmd->add_option("--eta", design_args.eta, "Information ridge")
      ->capture_default_str();
  design_cmd->add_option("--bins", design_args.bins, "Design bins")->capture_default_str();
  design_cmd->add_option("--min-mass", design_args.min_mass, "Minimum bin mass")
      ->capture_default_str();
  design_cmd->add_option("--polish", design_args.polish, "Max 1-exchange polish moves")
      ->capture_default_str();
  design_cmd->add_option("--weights", design_args.weights,
                         "Comma-separated bin weights (default uniform)");
  add_output_options(design_cmd, design_args.out);

  auto* diag_cmd = app.add_subcommand("diagnose", "Saturation and contamination analyses");
  diag_cmd->require_subcommand(1);
  DiagnoseCommon diag_common;
  std::string st_task, st_cutoff, st_log_base = "e";
  double st_size_cutoff = 13e9;
  auto* st_cmd = diag_cmd->add_subcommand("size-time", "Size-time boundary model");
  st_cmd->add_option("--data", diag_common.data_path, "Records CSV/JSON")->required();
  st_cmd->add_option("--task", st_task, "Task name")->required();
  st_cmd->add_option("--cutoff", st_cutoff, "Late-period cutoff date")->required();
  st_cmd->add_option("--size-cutoff", st_size_cutoff, "Reference parameter count")
      ->capture_default_str();
  st_cmd->add_option("--log-base", st_log_base, "Log base for params: e|10")
      ->capture_default_str();
  add_fit_options(st_cmd, diag_common.fo);
  add_output_options(st_cmd, diag_common.out);

  std::string dom_task;
  double dom_size_cutoff = 13e9;
  auto* dom_cmd = diag_cmd->add_subcommand("dominance", "Small-model dominance labels");
  dom_cmd->add_option("--data", diag_common.data_path, "Records CSV/JSON")->required();
  dom_cmd->add_option("--task", dom_task, "Task name")->required();
  dom_cmd->add_option("--size-cutoff", dom_size_cutoff, "Large-model threshold (params)")
      ->capture_default_str();
  add_output_options(dom_cmd, diag_common.out);

  std::string shift_ref, shift_target, shift_post;
  bool shift_restrict = false;
  auto* shift_cmd = diag_cmd->add_subcommand("shift", "Cross-benchmark shift regression");
  shift_cmd->add_option("--data", diag_common.data_path, "Records CSV/JSON")->required();
  shift_cmd->add_option("--reference-task", shift_ref, "Anchor benchmark")->required();
  shift_cmd->add_option("--target-task", shift_target, "Probed benchmark")->required();
  shift_cmd->add_option("--post-date", shift_post, "Release cutoff for the post group")
      ->required();
  shift_cmd->add_flag("--restrict", shift_restrict,
                      "Restrict to the overlapping reference-score range");
  add_output_options(shift_cmd, diag_common.out);

  std::vector<std::string> pca_tasks;
  int pca_k = 3;
  auto* pca_cmd = diag_cmd->add_subcommand("pca", "Latent-factor boundaries");
  pca_cmd->add_option("--data", diag_common.data_path, "Records CSV/JSON")->required();
  pca_cmd->add_option("--tasks", pca_tasks, "Task names (default all)");
  pca_cmd->add_option("--k", pca_k, "Number of components")->capture_default_str();
  add_fit_options(pca_cmd, diag_common.fo);
  add_output_options(pca_cmd, diag_common.out);

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate ground-truth synthetic records");
  sim_cmd->add_option("--n", sim_args.n, "Number of records")->capture_default_str();
  sim_cmd->add_option("--seed", sim_args.seed, "Generator seed")->capture_default_str();
  sim_cmd->add_option("--z-min", sim_args.z_lo, "Lower log10-FLOPs bound")
      ->capture_default_str();
  sim_cmd->add_option("--z-max", sim_args.z_hi, "Upper log10-FLOPs bound")
      ->capture_default_str();
  sim_cmd->add_option("--floor", sim_args.floor, "Truth floor")->capture_default_str();
  sim_cmd->add_option("--rise", sim_args.rise, "Truth rise")->capture_default_str();
  sim_cmd->add_option("--offset", sim_args.offset, "Truth offset")->capture_default_str();
  sim_cmd->add_option("--slope", sim_args.slope, "Truth slope")->capture_default_str();
  sim_cmd->add_option("--exceed-prob", sim_args.exceed_prob, "Above-boundary probability")
      ->capture_default_str();
  sim_cmd->add_option("--gap-law", sim_args.gap_law, "uniform|beta")->capture_default_str();
  sim_cmd->add_option("--gap-min", sim_args.gap_min, "Uniform gap minimum")
      ->capture_default_str();
  sim_cmd->add_option("--gap-max", sim_args.gap_max, "Uniform gap maximum")
      ->capture_default_str();
  sim_cmd->add_option("--bump-max", sim_args.bump_max, "Exceeder bump maximum")
      ->capture_default_str();
  sim_cmd->add_option("--drift", sim_args.drift,
                      "Comma-separated per-period boundary offsets");
  sim_cmd->add_option("--task", sim_args.task, "Task column name")->capture_default_str();
  add_output_options(sim_cmd, sim_args.out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit_cmd->parsed()) return run_fit(fit_args);
    if (eval_cmd->parsed()) return run_evaluate(eval_args);
    if (sweep_cmd->parsed()) return run_sweep(sweep_args);
    if (design_cmd->parsed()) return run_design(design_args);
    if (diag_cmd->parsed()) {
      if (st_cmd->parsed())
        return run_size_time(diag_common, st_task, st_cutoff, st_size_cutoff, st_log_base);
      if (dom_cmd->parsed()) return run_dominance(diag_common, dom_task, dom_size_cutoff);
      if (shift_cmd->parsed())
        return run_shift(diag_common, shift_ref, shift_target, shift_post, shift_restrict);
      if (pca_cmd->parsed()) return run_pca(diag_common, pca_tasks, pca_k);
    }
    if (sim_cmd->parsed()) return run_simulate(sim_args);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
