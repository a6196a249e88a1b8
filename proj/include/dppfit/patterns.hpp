#pragma once

#include "dppfit/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace dppfit {

/// A finite point configuration observed in a rectangular window.
/// Coordinates are stored row-major, dim() values per point.
class PointPattern {
 public:
  explicit PointPattern(RectWindow window);
  /// Throws ValidationError if a point lies outside the window.
  PointPattern(RectWindow window, std::vector<double> coords);

  const RectWindow& window() const { return window_; }
  int dim() const { return window_.dim(); }
  std::size_t size() const { return coords_.size() / static_cast<std::size_t>(dim()); }
  bool empty() const { return coords_.empty(); }
  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim()), static_cast<std::size_t>(dim())};
  }
  std::span<const double> coords() const { return coords_; }

  /// Throws ValidationError if x lies outside the window.
  void add(std::span<const double> x);

  /// Points inside `sub`, observed in `sub`.
  PointPattern restrict_to(const RectWindow& sub) const;

 private:
  RectWindow window_;
  std::vector<double> coords_;
};

std::size_t count(const PointPattern& pattern);

/// For every point, the indices of the other points within distance r,
/// ascending. Built by uniform grid bucketing with cells no smaller than r.
struct NeighborLists {
  std::vector<std::size_t> offsets;  // size() + 1 entries
  std::vector<std::uint32_t> indices;

  std::span<const std::uint32_t> of(std::size_t i) const {
    return {indices.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};
NeighborLists neighbor_lists(const PointPattern& pattern, double r);

using IndexPair = std::pair<std::uint32_t, std::uint32_t>;

/// All ordered pairs (i, j), i != j, with |x_i - x_j| <= r, sorted.
std::vector<IndexPair> close_pairs(const PointPattern& pattern, double r);

inline constexpr int kDefaultMaxTupleOrder = 4;

/// Ordered p-tuples of distinct indices with |x_1 - x_j| <= r for j = 2..p,
/// flattened with stride `order`. Orders above `max_order` are refused.
std::vector<std::uint32_t> close_tuples(const PointPattern& pattern, double r, int order,
                                        int max_order = kDefaultMaxTupleOrder);

/// Reads a point CSV ("x,y" header for d = 2) and validates it against `window`.
PointPattern read_csv(const std::filesystem::path& path, const RectWindow& window);
void write_csv(const PointPattern& pattern, const std::filesystem::path& path);

/// JSON sidecar {"window": {"lower": [...], "upper": [...]}}.
RectWindow read_window_json(const std::filesystem::path& path);
void write_window_json(const RectWindow& window, const std::filesystem::path& path);

struct PcfBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t pairs = 0;
  /// Missing when no pair fell in the bin.
  std::optional<double> value;
};

/// Translation-corrected binned pair correlation estimate over the bins
/// [edges[k], edges[k+1]).
std::vector<PcfBin> empirical_pcf(const PointPattern& pattern, std::span<const double> edges);

}  // namespace dppfit
