#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "levelrepair/attribution.hpp"

namespace levelrepair {

struct BinaryMap {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> values;

  bool at(int row, int col) const { return values[static_cast<std::size_t>(row) * cols + col] != 0; }
};

/// Value at rank ceil(p/100 * n) of the ascending values (no interpolation).
double nearest_rank_percentile(std::span<const double> values, double percentile);

/// Marks cells whose attribution is >= the nearest-rank percentile.
BinaryMap threshold_percentile(const AttributionGrid& grid, double percentile);

struct ComponentLabels {
  int rows = 0;
  int cols = 0;
  std::vector<int> labels;  // 0 = background, components numbered from 1 in scan order
  std::vector<int> areas;   // areas[k - 1] is the area of label k

  int count() const { return static_cast<int>(areas.size()); }
  int at(int row, int col) const { return labels[static_cast<std::size_t>(row) * cols + col]; }
};

/// Two-pass union-find labeling, connectivity 4 or 8.
ComponentLabels connected_components(const BinaryMap& map, int connectivity);

struct WeightGrid {
  int rows = 0;
  int cols = 0;
  std::vector<int> values;

  int at(int row, int col) const { return values[static_cast<std::size_t>(row) * cols + col]; }
  bool operator==(const WeightGrid&) const = default;
};

struct WeightParams {
  double percentile = 80.0;
  int low = 1;
  int high = 10;
  int connectivity = 8;
};

/// Largest component of the thresholded map gets `low`, every other cell
/// gets `high`. Area ties go to the component seen first in scan order.
WeightGrid attributions_to_weights(const AttributionGrid& grid, const WeightParams& params = {});

WeightGrid uniform_weights(int rows, int cols, int weight);

std::string weights_csv(const WeightGrid& weights);
WeightGrid parse_weights_csv(std::string_view text);

/// Square heat grid; `dark_low` paints minimum values black.
std::string heat_grid_svg(int rows, int cols, std::span<const double> values, bool dark_low, int cell_px = 16);

}  // namespace levelrepair
