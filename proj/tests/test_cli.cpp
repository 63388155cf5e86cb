#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "capbound/estimators.hpp"
#include "capbound/evaluation.hpp"
#include "capbound/records.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using capbound::testutil::read_file;
using capbound::testutil::tmp_dir;
using capbound::testutil::write_file;

namespace {

int run_cli(const std::string& args, const std::string& log_name = "cli.log") {
  const std::string cmd = std::string(CAPBOUND_CLI) + " " + args + " >" +
                          (tmp_dir() / log_name).string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

nlohmann::json load_json_file(const fs::path& p) {
  return nlohmann::json::parse(read_file(p));
}

}  // namespace

TEST_CASE("cli: simulate, fit, evaluate pipeline with deterministic reruns") {
  const auto sim_dir = tmp_dir() / "sim";
  REQUIRE(run_cli("simulate --n 1200 --seed 4 --gap-law uniform --drift 0,0 --out " +
                  sim_dir.string()) == 0);
  REQUIRE(fs::exists(sim_dir / "dataset.csv"));
  REQUIRE(fs::exists(sim_dir / "truth.json"));
  REQUIRE(fs::exists(sim_dir / "manifest.json"));

  const auto fit1 = tmp_dir() / "fit1";
  const auto fit2 = tmp_dir() / "fit2";
  const std::string fit_args = "fit --data " + (sim_dir / "dataset.csv").string() +
                               " --task synthetic --family sigmoid --seed 7 --predict-at 20,24";
  REQUIRE(run_cli(fit_args + " --out " + fit1.string()) == 0);
  REQUIRE(run_cli(fit_args + " --out " + fit2.string()) == 0);
  CHECK(read_file(fit1 / "model.json") == read_file(fit2 / "model.json"));
  CHECK(read_file(fit1 / "report.json") == read_file(fit2 / "report.json"));
  CHECK(read_file(fit1 / "report.csv") == read_file(fit2 / "report.csv"));

  const std::string input_before = read_file(sim_dir / "dataset.csv");
  const auto eval_dir = tmp_dir() / "eval";
  REQUIRE(run_cli("evaluate --data " + (sim_dir / "dataset.csv").string() +
                  " --task synthetic --cutoffs 2024-06-29 --families constant,sigmoid"
                  " --min-mass 5 --seed 3 --out " +
                  eval_dir.string()) == 0);
  const auto report = load_json_file(eval_dir / "report.json");
  CHECK(report.at("mode") == "rolling");
  CHECK(report.at("tasks").size() == 1);
  CHECK(read_file(sim_dir / "dataset.csv") == input_before);  // inputs untouched
}

TEST_CASE("cli: single-period evaluate emits only in-distribution metrics") {
  const auto sim_dir = tmp_dir() / "sim_single";
  REQUIRE(run_cli("simulate --n 400 --seed 5 --gap-law uniform --out " + sim_dir.string()) ==
          0);
  const auto eval_dir = tmp_dir() / "eval_single";
  REQUIRE(run_cli("evaluate --data " + (sim_dir / "dataset.csv").string() +
                  " --task synthetic --families constant --min-mass 5 --out " +
                  eval_dir.string()) == 0);
  const auto report = load_json_file(eval_dir / "report.json");
  CHECK(report.at("mode") == "single_period");
  const auto& fam = report.at("tasks").at(0).at("families").at(0);
  CHECK_FALSE(fam.at("id").is_null());
  CHECK(fam.at("ood").is_null());
}

TEST_CASE("cli: design at full budget selects the entire pool") {
  const auto sim_dir = tmp_dir() / "sim_design";
  REQUIRE(run_cli("simulate --n 120 --seed 6 --gap-law uniform --out " + sim_dir.string()) ==
          0);
  const auto fit_dir = tmp_dir() / "fit_design";
  REQUIRE(run_cli("fit --data " + (sim_dir / "dataset.csv").string() +
                  " --task synthetic --family sigmoid --seed 2 --out " + fit_dir.string()) ==
          0);
  const auto design_dir = tmp_dir() / "design_full";
  REQUIRE(run_cli("design --pool " + (sim_dir / "dataset.csv").string() + " --theta0 " +
                  (fit_dir / "model.json").string() + " --alpha 100 --out " +
                  design_dir.string()) == 0);
  const auto report = load_json_file(design_dir / "report.json");
  CHECK(report.at("selected").size() == 120);
  // Feasible up to summation roundoff (costs here are parameter counts ~1e10).
  CHECK(report.at("total_cost").get<double>() <=
        report.at("budget").get<double>() * (1.0 + 1e-9));

  // The three-column pool schema is accepted as well.
  std::string pool_csv = "model_id,pretraining_flops,param_count\n";
  pool_csv += "a,1e22,7e9\nb,5e22,9e9\nc,2e23,1.3e10\nd,1e24,3e10\ne,3e21,2e9\n";
  const auto pool_path = write_file("minipool.csv", pool_csv);
  const auto design2 = tmp_dir() / "design_mini";
  REQUIRE(run_cli("design --pool " + pool_path.string() + " --theta0 " +
                  (fit_dir / "model.json").string() +
                  " --alpha 60 --bins 2 --out " + design2.string()) == 0);
  const auto rep2 = load_json_file(design2 / "report.json");
  CHECK(rep2.at("selected").size() >= 1);
  CHECK(rep2.at("trace").size() >= 1);
}

TEST_CASE("cli: rolling evaluate aggregates across several tasks") {
  using namespace capbound;
  const auto sim_dir = tmp_dir() / "sim_multi";
  REQUIRE(run_cli("simulate --n 900 --seed 14 --gap-law uniform --drift 0,0 --out " +
                  sim_dir.string()) == 0);
  Dataset d = load_records((sim_dir / "dataset.csv").string());
  for (auto& r : d.records) {
    const double s = *r.score("synthetic");
    r.scores["second"] = std::min(1.0, std::max(0.0, 0.1 + 0.7 * s));
  }
  const auto multi_csv = tmp_dir() / "multi.csv";
  save_csv(dataset_from_records(d.records), multi_csv);

  const auto dir = tmp_dir() / "eval_multi";
  REQUIRE(run_cli("evaluate --data " + multi_csv.string() +
                  " --task synthetic --task second --cutoffs 2024-06-29"
                  " --families constant,sigmoid --min-mass 5 --seed 3 --out " +
                  dir.string()) == 0);
  const auto report = load_json_file(dir / "report.json");
  CHECK(report.at("tasks").size() == 2);
  REQUIRE(report.contains("cross_task_averages"));
  bool saw_sigmoid = false;
  for (const auto& row : report.at("cross_task_averages")) {
    if (row.at("family") != "sigmoid") continue;
    saw_sigmoid = true;
    CHECK_FALSE(row.at("ood_pinball").is_null());
    CHECK_FALSE(row.at("ood_calibration").is_null());
  }
  CHECK(saw_sigmoid);
}

TEST_CASE("cli: constant fit on a single record lands near its score") {
  const auto one = write_file("one.csv",
                              "model_id,base_model_id,pretraining_flops,param_count,"
                              "release_date,flag_official,flag_pretrained,t\n"
                              "m1,b,1e22,1e9,2024-01-01,0,0,0.62\n");
  const auto dir = tmp_dir() / "fit_one";
  REQUIRE(run_cli("fit --data " + one.string() + " --task t --family constant --out " +
                  dir.string()) == 0);
  const auto model = load_json_file(dir / "model.json");
  CHECK(model.at("family") == "constant");
  CHECK(std::fabs(model.at("params").at("level").get<double>() - 0.62) < 0.1);
}

TEST_CASE("cli: a 20% design budget nearly matches the full-data boundary") {
  using namespace capbound;
  const auto sim_dir = tmp_dir() / "sim_e2e";
  REQUIRE(run_cli("simulate --n 2400 --seed 21 --gap-law uniform --drift 0,0 --out " +
                  sim_dir.string()) == 0);
  const Dataset all = load_records((sim_dir / "dataset.csv").string());
  const auto periods = PeriodPartition::from_cutoffs({parse_date("2024-06-29")});
  const auto parts = partition_periods(all, periods);
  const auto train_csv = tmp_dir() / "e2e_train.csv";
  save_csv(parts[0], train_csv);

  const auto fit_full = tmp_dir() / "e2e_fit_full";
  REQUIRE(run_cli("fit --data " + train_csv.string() +
                  " --task synthetic --family sigmoid --seed 4 --out " +
                  fit_full.string()) == 0);
  const auto design_dir = tmp_dir() / "e2e_design";
  REQUIRE(run_cli("design --pool " + train_csv.string() + " --theta0 " +
                  (fit_full / "model.json").string() + " --alpha 20 --out " +
                  design_dir.string()) == 0);

  // Fit on the selected subset only, then compare both fits on the next
  // period inside the training range.
  const auto selection = load_json_file(design_dir / "report.json").at("selected");
  std::vector<ModelRecord> chosen;
  for (const auto& r : parts[0].records)
    for (const auto& id : selection)
      if (id.get<std::string>() == r.model_id) chosen.push_back(r);
  const Dataset subset = dataset_from_records(chosen);
  const auto subset_csv = tmp_dir() / "e2e_subset.csv";
  save_csv(subset, subset_csv);
  const auto fit_sub = tmp_dir() / "e2e_fit_sub";
  REQUIRE(run_cli("fit --data " + subset_csv.string() +
                  " --task synthetic --family sigmoid --seed 4 --out " +
                  fit_sub.string()) == 0);

  std::vector<double> vz, vy;
  parts[1].task_points("synthetic", vz, vy);
  const LossConfig loss{0.98, 50.0};
  const auto m_full =
      BoundaryModel::from_json(load_json_file(fit_full / "model.json"));
  const auto m_sub = BoundaryModel::from_json(load_json_file(fit_sub / "model.json"));
  const double full_pinball = mean_pinball(m_full, vz, vy, loss);
  const double sub_pinball = mean_pinball(m_sub, vz, vy, loss);
  CHECK(std::fabs(sub_pinball - full_pinball) <= 0.10 * full_pinball);
}

TEST_CASE("cli: errors surface as exit code 1 with useful messages") {
  const auto sim_dir = tmp_dir() / "sim_err";
  REQUIRE(run_cli("simulate --n 50 --seed 8 --out " + sim_dir.string()) == 0);
  CHECK(run_cli("fit --data " + (sim_dir / "dataset.csv").string() +
                " --task nope --family sigmoid", "err1.log") == 1);
  const std::string log = read_file(tmp_dir() / "err1.log");
  CHECK(log.find("available") != std::string::npos);
  CHECK(log.find("synthetic") != std::string::npos);

  const auto bad = write_file("bad.csv",
                              "model_id,base_model_id,pretraining_flops,param_count,"
                              "release_date,flag_official,flag_pretrained,t\n"
                              "m1,b,1e22,1e9,2024-01-01,0,0,1.7\n");
  CHECK(run_cli("fit --data " + bad.string() + " --task t --family constant",
                "err2.log") == 1);
  CHECK(read_file(tmp_dir() / "err2.log").find("row 1") != std::string::npos);
}

TEST_CASE("cli: diagnose subcommands run end to end") {
  const auto sim_dir = tmp_dir() / "sim_diag";
  REQUIRE(run_cli("simulate --n 900 --seed 11 --gap-law uniform --drift 0,0.05 --out " +
                  sim_dir.string()) == 0);

  const auto dom_dir = tmp_dir() / "diag_dom";
  REQUIRE(run_cli("diagnose dominance --data " + (sim_dir / "dataset.csv").string() +
                  " --task synthetic --size-cutoff 13e9 --out " + dom_dir.string()) == 0);
  const auto dom = load_json_file(dom_dir / "report.json");
  CHECK(dom.contains("dominated_fraction"));

  const auto st_dir = tmp_dir() / "diag_st";
  REQUIRE(run_cli("diagnose size-time --data " + (sim_dir / "dataset.csv").string() +
                  " --task synthetic --cutoff 2024-06-29 --seed 2 --out " +
                  st_dir.string()) == 0);
  const auto st = load_json_file(st_dir / "report.json");
  CHECK(st.contains("beta_late"));

  // Shift test needs two score columns: derive one from the dataset.
  using namespace capbound;
  Dataset d = load_records((sim_dir / "dataset.csv").string());
  for (auto& r : d.records) {
    const double s = *r.score("synthetic");
    r.scores["probe"] = std::min(1.0, std::max(0.0, 0.05 + 0.85 * s));
  }
  Dataset d2 = dataset_from_records(d.records);
  const auto shift_data = tmp_dir() / "shift_data.csv";
  save_csv(d2, shift_data);
  const auto shift_dir = tmp_dir() / "diag_shift";
  REQUIRE(run_cli("diagnose shift --data " + shift_data.string() +
                  " --reference-task synthetic --target-task probe --post-date 2024-06-29"
                  " --restrict --out " +
                  shift_dir.string()) == 0);
  const auto shift = load_json_file(shift_dir / "report.json");
  CHECK(shift.at("n").get<long>() > 0);
  CHECK(shift.at("p_value").get<double>() >= 0.0);
  CHECK(shift.at("p_value").get<double>() <= 1.0);

  const auto pca_dir = tmp_dir() / "diag_pca";
  REQUIRE(run_cli("diagnose pca --data " + shift_data.string() +
                  " --tasks synthetic --tasks probe --k 1 --seed 4 --out " +
                  pca_dir.string()) == 0);
  const auto pca = load_json_file(pca_dir / "report.json");
  CHECK(pca.at("explained_variance").at(0).get<double>() > 0.9);
}
