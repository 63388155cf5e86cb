#include "capbound/records.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "capbound/errors.hpp"

namespace capbound {

namespace {

constexpr const char* kFixedColumns[] = {
    "model_id", "base_model_id", "pretraining_flops", "param_count",
    "release_date", "flag_official", "flag_pretrained"};
constexpr std::size_t kFixedCount = 7;

std::string row_field(std::size_t row, const std::string& field) {
  return "row " + std::to_string(row) + ", field '" + field + "': ";
}

double parse_double(const std::string& cell, std::size_t row, const std::string& field) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw ValidationError(row_field(row, field) + "'" + cell + "' is not a number");
  return v;
}

bool parse_flag(const std::string& cell, std::size_t row, const std::string& field) {
  if (cell.empty() || cell == "0" || cell == "false") return false;
  if (cell == "1" || cell == "true") return true;
  throw ValidationError(row_field(row, field) + "'" + cell + "' is not a boolean");
}

// RFC-4180-style line splitting with double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  if (quoted) throw ValidationError("row " + std::to_string(row) + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out += ch;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void check_positive(double v, std::size_t row, const std::string& field) {
  if (!(v > 0.0)) throw ValidationError(row_field(row, field) + "must be positive");
}

void check_score(double v, std::size_t row, const std::string& field) {
  if (!(v >= 0.0 && v <= 1.0))
    throw ValidationError(row_field(row, field) + "score " + format_double(v) +
                          " outside [0,1]");
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("'" + path.string() + "' is empty");
  const auto header = split_csv_line(line, 0);
  if (header.size() < kFixedCount)
    throw ValidationError("header must start with the seven fixed columns");
  for (std::size_t i = 0; i < kFixedCount; ++i)
    if (header[i] != kFixedColumns[i])
      throw ValidationError("header column " + std::to_string(i + 1) + " must be '" +
                            kFixedColumns[i] + "', got '" + header[i] + "'");
  const std::vector<std::string> tasks(header.begin() + kFixedCount, header.end());

  std::vector<ModelRecord> records;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    if (line.empty()) {
      ++row;
      continue;
    }
    const auto cells = split_csv_line(line, row);
    if (cells.size() != header.size())
      throw ValidationError("row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
    ModelRecord r;
    r.model_id = cells[0];
    if (r.model_id.empty())
      throw ValidationError(row_field(row, "model_id") + "must not be empty");
    r.base_model_id = cells[1];
    if (!cells[2].empty()) {
      const double flops = parse_double(cells[2], row, "pretraining_flops");
      check_positive(flops, row, "pretraining_flops");
      r.pretraining_flops = flops;
    }
    if (!cells[3].empty()) {
      const double params = parse_double(cells[3], row, "param_count");
      check_positive(params, row, "param_count");
      r.param_count = params;
    }
    try {
      r.release_date = parse_date(cells[4]);
    } catch (const ValidationError& e) {
      throw ValidationError(row_field(row, "release_date") + e.what());
    }
    r.flags.official = parse_flag(cells[5], row, "flag_official");
    r.flags.pretrained = parse_flag(cells[6], row, "flag_pretrained");
    r.flags.post_trained = !r.flags.pretrained;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const std::string& cell = cells[kFixedCount + t];
      if (cell.empty()) continue;
      const double v = parse_double(cell, row, tasks[t]);
      check_score(v, row, tasks[t]);
      r.scores[tasks[t]] = v;
    }
    records.push_back(std::move(r));
    ++row;
  }
  return dataset_from_records(std::move(records));
}

Dataset load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
  if (!doc.is_array()) throw ValidationError("JSON dataset must be an array of objects");
  std::vector<ModelRecord> records;
  std::size_t row = 1;
  for (const auto& obj : doc) {
    if (!obj.is_object())
      throw ValidationError("row " + std::to_string(row) + ": not an object");
    ModelRecord r;
    r.model_id = obj.at("model_id").get<std::string>();
    r.base_model_id = obj.value("base_model_id", std::string{});
    if (obj.contains("pretraining_flops") && !obj["pretraining_flops"].is_null()) {
      const double flops = obj["pretraining_flops"].get<double>();
      check_positive(flops, row, "pretraining_flops");
      r.pretraining_flops = flops;
    }
    if (obj.contains("param_count") && !obj["param_count"].is_null()) {
      const double params = obj["param_count"].get<double>();
      check_positive(params, row, "param_count");
      r.param_count = params;
    }
    try {
      r.release_date = parse_date(obj.at("release_date").get<std::string>());
    } catch (const ValidationError& e) {
      throw ValidationError(row_field(row, "release_date") + e.what());
    }
    r.flags.official = obj.value("flag_official", false);
    r.flags.pretrained = obj.value("flag_pretrained", false);
    r.flags.post_trained = !r.flags.pretrained;
    if (obj.contains("scores")) {
      for (const auto& [task, v] : obj["scores"].items()) {
        if (v.is_null()) continue;
        const double s = v.get<double>();
        check_score(s, row, task);
        r.scores[task] = s;
      }
    }
    records.push_back(std::move(r));
    ++row;
  }
  return dataset_from_records(std::move(records));
}

}  // namespace

std::optional<double> ModelRecord::score(const std::string& task) const {
  const auto it = scores.find(task);
  if (it == scores.end()) return std::nullopt;
  return it->second;
}

double derive_log_compute(const ModelRecord& r) {
  if (!r.pretraining_flops) throw ValidationError("record '" + r.model_id + "' has no compute");
  if (!(*r.pretraining_flops > 0.0))
    throw ValidationError("record '" + r.model_id + "' has non-positive compute");
  return std::log10(*r.pretraining_flops);
}

bool Dataset::has_task(const std::string& task) const {
  return std::find(task_names.begin(), task_names.end(), task) != task_names.end();
}

void Dataset::task_points(const std::string& task, std::vector<double>& z,
                          std::vector<double>& y) const {
  z.clear();
  y.clear();
  for (const auto& r : records) {
    if (!r.has_compute()) continue;
    const auto s = r.score(task);
    if (!s) continue;
    z.push_back(derive_log_compute(r));
    y.push_back(*s);
  }
}

std::vector<double> Dataset::log_compute_values() const {
  std::vector<double> z;
  for (const auto& r : records)
    if (r.has_compute()) z.push_back(derive_log_compute(r));
  return z;
}

Dataset dataset_from_records(std::vector<ModelRecord> records) {
  Dataset d;
  std::set<std::string> ids;
  std::set<std::string> tasks;
  for (const auto& r : records) {
    if (!ids.insert(r.model_id).second)
      throw ValidationError("duplicate model_id '" + r.model_id + "'");
    for (const auto& [task, v] : r.scores) tasks.insert(task);
  }
  d.records = std::move(records);
  d.task_names.assign(tasks.begin(), tasks.end());
  return d;
}

Dataset load_records(const std::filesystem::path& path, FileFormat format) {
  switch (format) {
    case FileFormat::csv: return load_csv(path);
    case FileFormat::json: return load_json_file(path);
  }
  throw ValidationError("unknown format");
}

Dataset load_records(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return load_records(path, FileFormat::csv);
  if (ext == ".json") return load_records(path, FileFormat::json);
  throw ValidationError("unknown format for '" + path.string() + "' (expect .csv or .json)");
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < kFixedCount; ++i) out << (i ? "," : "") << kFixedColumns[i];
  for (const auto& task : d.task_names) out << ',' << csv_escape(task);
  out << '\n';
  for (const auto& r : d.records) {
    out << csv_escape(r.model_id) << ',' << csv_escape(r.base_model_id) << ',';
    if (r.pretraining_flops) out << format_double(*r.pretraining_flops);
    out << ',';
    if (r.param_count) out << format_double(*r.param_count);
    out << ',' << format_date(r.release_date) << ',' << (r.flags.official ? 1 : 0) << ','
        << (r.flags.pretrained ? 1 : 0);
    for (const auto& task : d.task_names) {
      out << ',';
      const auto s = r.score(task);
      if (s) out << format_double(*s);
    }
    out << '\n';
  }
}

void save_json(const Dataset& d, const std::filesystem::path& path) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : d.records) {
    nlohmann::ordered_json obj;
    obj["model_id"] = r.model_id;
    obj["base_model_id"] = r.base_model_id;
    if (r.pretraining_flops) obj["pretraining_flops"] = *r.pretraining_flops;
    else obj["pretraining_flops"] = nullptr;
    if (r.param_count) obj["param_count"] = *r.param_count;
    else obj["param_count"] = nullptr;
    obj["release_date"] = format_date(r.release_date);
    obj["flag_official"] = r.flags.official;
    obj["flag_pretrained"] = r.flags.pretrained;
    nlohmann::ordered_json scores;
    for (const auto& [task, v] : r.scores) scores[task] = v;
    obj["scores"] = std::move(scores);
    arr.push_back(std::move(obj));
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << arr.dump(2) << '\n';
}

PeriodPartition PeriodPartition::from_cutoffs(std::vector<Date> cutoffs,
                                              std::vector<std::string> labels) {
  for (std::size_t i = 1; i < cutoffs.size(); ++i)
    if (!(cutoffs[i - 1] < cutoffs[i]))
      throw ValidationError("period cutoffs must be strictly increasing");
  PeriodPartition p;
  p.cutoffs = std::move(cutoffs);
  if (labels.empty()) {
    for (std::size_t i = 0; i <= p.cutoffs.size(); ++i)
      labels.push_back("P" + std::to_string(i + 1));
  }
  if (labels.size() != p.cutoffs.size() + 1)
    throw ValidationError("need exactly one label per period");
  p.labels = std::move(labels);
  return p;
}

std::size_t PeriodPartition::period_of(Date d) const {
  std::size_t idx = 0;
  while (idx < cutoffs.size() && d >= cutoffs[idx]) ++idx;
  return idx;
}

std::vector<Dataset> partition_periods(const Dataset& d, const PeriodPartition& p) {
  std::vector<std::vector<ModelRecord>> buckets(p.periods());
  for (const auto& r : d.records) buckets[p.period_of(r.release_date)].push_back(r);
  std::vector<Dataset> out;
  out.reserve(buckets.size());
  for (auto& b : buckets) out.push_back(dataset_from_records(std::move(b)));
  return out;
}

std::optional<Interval> overlap_range(const Dataset& train, const Dataset& valid) {
  const auto tz = train.log_compute_values();
  const auto vz = valid.log_compute_values();
  if (tz.empty() || vz.empty())
    throw ValidationError("overlap_range: a dataset has no compute values");
  const auto [tmin, tmax] = std::minmax_element(tz.begin(), tz.end());
  const auto [vmin, vmax] = std::minmax_element(vz.begin(), vz.end());
  Interval iv{std::max(*tmin, *vmin), std::min(*tmax, *vmax)};
  if (iv.lo > iv.hi) return std::nullopt;
  return iv;
}

}  // namespace capbound
