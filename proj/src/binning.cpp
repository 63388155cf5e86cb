#include "capbound/binning.hpp"

#include <algorithm>
#include <cmath>

#include "capbound/errors.hpp"

namespace capbound {

std::vector<double> BinPartition::midpoints() const {
  std::vector<double> m(bins());
  for (std::size_t b = 0; b < bins(); ++b) m[b] = midpoint(b);
  return m;
}

std::optional<std::size_t> BinPartition::assign(double z) const {
  if (edges.empty() || z < edges.front() || z > edges.back()) return std::nullopt;
  if (z == edges.back()) return bins() - 1;  // last bin closed on the right
  // upper_bound: first edge strictly greater than z; bin = index of that edge - 1.
  const auto it = std::upper_bound(edges.begin(), edges.end(), z);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

nlohmann::ordered_json BinPartition::to_json() const {
  nlohmann::ordered_json j;
  j["edges"] = edges;
  j["counts"] = counts;
  if (undersized) j["undersized"] = true;
  return j;
}

BinPartition BinPartition::from_json(const nlohmann::json& j) {
  BinPartition p;
  p.edges = j.at("edges").get<std::vector<double>>();
  p.counts = j.at("counts").get<std::vector<long>>();
  p.undersized = j.value("undersized", false);
  if (p.edges.size() != p.counts.size() + 1)
    throw ValidationError("bin partition: edges/counts size mismatch");
  return p;
}

BinPartition build_bins(std::span<const double> z_values, int target_bins, int min_mass) {
  if (z_values.empty()) throw ValidationError("build_bins: empty input");
  if (target_bins < 1) throw ValidationError("build_bins: target_bins must be >= 1");
  if (min_mass < 1) throw ValidationError("build_bins: min_mass must be >= 1");

  // Unique levels with multiplicities.
  std::vector<double> sorted(z_values.begin(), z_values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> level;
  std::vector<long> mult;
  for (double v : sorted) {
    if (!level.empty() && v == level.back()) {
      ++mult.back();
    } else {
      level.push_back(v);
      mult.push_back(1);
    }
  }
  const long n = static_cast<long>(sorted.size());
  const std::size_t groups = level.size();

  BinPartition p;
  if (groups == 1) {
    // All values identical: one degenerate bin covering the single point.
    p.edges = {level[0], level[0]};
    p.counts = {n};
    p.undersized = n < min_mass;
    return p;
  }

  const long b_eff = std::min<long>(target_bins, static_cast<long>(groups));
  const long mass =
      std::max<long>(min_mass, (n + b_eff - 1) / b_eff);  // ceil(N / B_eff)

  // Sweep: close a bin whenever the running mass reaches the target. The
  // closing edge is the next unique level, so half-open bins keep every
  // accumulated group (and all copies of a tied value stay together). When
  // the final bin is exactly the top tied group, its edge pair coincides at
  // that level; assign() still resolves it via the last-bin-inclusive rule.
  p.edges.push_back(level.front());
  long acc = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    acc += mult[g];
    if (acc >= mass && g + 1 < groups) {
      p.edges.push_back(level[g + 1]);
      p.counts.push_back(acc);
      acc = 0;
    }
  }
  p.edges.push_back(level.back());
  p.counts.push_back(acc);

  merge_small_bins(p.edges, p.counts, min_mass);
  p.undersized = p.counts.size() == 1 && p.counts[0] < min_mass;
  return p;
}

void merge_small_bins(std::vector<double>& edges, std::vector<long>& counts, int min_mass) {
  while (counts.size() > 1) {
    std::size_t small = counts.size();
    for (std::size_t b = 0; b < counts.size(); ++b) {
      if (counts[b] < min_mass) {
        small = b;
        break;
      }
    }
    if (small == counts.size()) break;
    std::size_t into;
    if (small == 0) {
      into = 1;
    } else if (small == counts.size() - 1) {
      into = small - 1;
    } else {
      into = counts[small - 1] <= counts[small + 1] ? small - 1 : small + 1;
    }
    const std::size_t lo = std::min(small, into);
    counts[lo] += counts[std::max(small, into)];
    counts.erase(counts.begin() + static_cast<long>(lo) + 1);
    edges.erase(edges.begin() + static_cast<long>(lo) + 1);
  }
}

}  // namespace capbound
