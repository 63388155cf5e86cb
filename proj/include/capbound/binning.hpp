#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace capbound {

// Equal-mass log-compute bins built from training data only. Bins are
// half-open [e_b, e_{b+1}) with the last bin closed on the right; edges sit
// on data values, and identical z values are never split across bins.
struct BinPartition {
  std::vector<double> edges;  // size bins()+1, increasing
  std::vector<long> counts;   // training count per bin
  // Set when merging could not lift a tiny dataset's single bin to the
  // minimum mass; callers may want to widen their data instead of trusting
  // per-bin statistics.
  bool undersized = false;

  std::size_t bins() const { return counts.size(); }
  double midpoint(std::size_t b) const { return 0.5 * (edges[b] + edges[b + 1]); }
  std::vector<double> midpoints() const;

  // Bin index for z, or nullopt when z lies outside [edges.front(), edges.back()].
  std::optional<std::size_t> assign(double z) const;

  nlohmann::ordered_json to_json() const;
  static BinPartition from_json(const nlohmann::json& j);
};

// Group-aware equal-mass binning: collapse to unique levels, sweep in
// increasing order placing an edge each time the accumulated mass reaches
// max(min_mass, ceil(N / min(target_bins, #levels))), then merge bins below
// min_mass into their smaller neighbor (left on ties) until all comply.
BinPartition build_bins(std::span<const double> z_values, int target_bins, int min_mass);

// The merge pass on its own: repeatedly fold the leftmost undersized bin
// into its smaller adjacent neighbor (left on ties) by removing the shared
// edge, until every bin reaches min_mass or one bin remains.
void merge_small_bins(std::vector<double>& edges, std::vector<long>& counts, int min_mass);

}  // namespace capbound
