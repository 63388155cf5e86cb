#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capbound/dates.hpp"

namespace capbound {

struct RecordFlags {
  bool official = false;
  bool pretrained = false;
  bool post_trained = false;

  bool operator==(const RecordFlags&) const = default;
};

// One evaluated checkpoint. Compute and parameter count may be absent in the
// source tables; such rows are retained and flagged incomplete rather than
// dropped, and are excluded per-fit when the fit needs the missing field.
struct ModelRecord {
  std::string model_id;
  std::string base_model_id;
  std::optional<double> pretraining_flops;  // > 0 when present
  std::optional<double> param_count;        // > 0 when present
  Date release_date;
  std::map<std::string, double> scores;  // task -> fraction correct in [0,1]
  RecordFlags flags;

  bool has_compute() const { return pretraining_flops.has_value(); }
  bool complete() const { return has_compute() && param_count.has_value(); }
  std::optional<double> score(const std::string& task) const;

  bool operator==(const ModelRecord&) const = default;
};

// log10 of pre-training FLOPs; throws on missing or non-positive compute.
double derive_log_compute(const ModelRecord& r);

struct Dataset {
  std::vector<ModelRecord> records;
  std::vector<std::string> task_names;  // sorted union of score keys

  std::size_t size() const { return records.size(); }
  bool has_task(const std::string& task) const;

  // Columns (z, y) over records that have both compute and a score for the
  // task; order follows `records`.
  void task_points(const std::string& task, std::vector<double>& z, std::vector<double>& y) const;

  // All log-compute values present in the dataset.
  std::vector<double> log_compute_values() const;
};

enum class FileFormat { csv, json };

Dataset load_records(const std::filesystem::path& path, FileFormat format);
Dataset load_records(const std::filesystem::path& path);  // by extension
Dataset dataset_from_records(std::vector<ModelRecord> records);

void save_csv(const Dataset& d, const std::filesystem::path& path);
void save_json(const Dataset& d, const std::filesystem::path& path);

// Chronological periods delimited by cutoff dates; intervals are half-open
// [start, end), so a record dated exactly on a cutoff joins the later period.
struct PeriodPartition {
  std::vector<Date> cutoffs;        // strictly increasing
  std::vector<std::string> labels;  // size cutoffs.size() + 1

  static PeriodPartition from_cutoffs(std::vector<Date> cutoffs,
                                      std::vector<std::string> labels = {});
  std::size_t periods() const { return cutoffs.size() + 1; }
  std::size_t period_of(Date d) const;
};

std::vector<Dataset> partition_periods(const Dataset& d, const PeriodPartition& p);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double z) const { return z >= lo && z <= hi; }
  double width() const { return hi - lo; }
};

// [max of minima, min of maxima] over the two z ranges; nullopt when the
// ranges are disjoint. Throws if either dataset has no compute values.
std::optional<Interval> overlap_range(const Dataset& train, const Dataset& valid);

}  // namespace capbound
