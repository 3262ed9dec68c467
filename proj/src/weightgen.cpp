#include "levelrepair/weightgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "levelrepair/error.hpp"

namespace levelrepair {
namespace {

struct DisjointSet {
  std::vector<int> parent;

  int make() {
    parent.push_back(static_cast<int>(parent.size()));
    return parent.back();
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

double nearest_rank_percentile(std::span<const double> values, double percentile) {
  if (values.empty()) throw Error(ErrorCode::EmptyGrid, "percentile of an empty grid");
  if (!(percentile > 0.0 && percentile < 100.0))
    throw Error(ErrorCode::InvalidArgument, "percentile must be in (0, 100)");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

BinaryMap threshold_percentile(const AttributionGrid& grid, double percentile) {
  for (double v : grid.values)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "attribution values must be finite");
  const double threshold = nearest_rank_percentile(grid.values, percentile);
  BinaryMap map{grid.rows, grid.cols, {}};
  map.values.reserve(grid.values.size());
  for (double v : grid.values) map.values.push_back(v >= threshold ? 1 : 0);
  return map;
}

ComponentLabels connected_components(const BinaryMap& map, int connectivity) {
  if (connectivity != 4 && connectivity != 8)
    throw Error(ErrorCode::InvalidArgument, "connectivity must be 4 or 8");
  ComponentLabels out{map.rows, map.cols, std::vector<int>(map.values.size(), 0), {}};
  std::vector<int> provisional(map.values.size(), -1);
  DisjointSet sets;

  // First pass: provisional labels from already-visited neighbours.
  for (int r = 0; r < map.rows; ++r) {
    for (int c = 0; c < map.cols; ++c) {
      if (!map.at(r, c)) continue;
      std::vector<int> seen;
      auto look = [&](int rr, int cc) {
        if (rr < 0 || cc < 0 || cc >= map.cols) return;
        const int l = provisional[static_cast<std::size_t>(rr) * map.cols + cc];
        if (l >= 0) seen.push_back(l);
      };
      look(r, c - 1);
      look(r - 1, c);
      if (connectivity == 8) {
        look(r - 1, c - 1);
        look(r - 1, c + 1);
      }
      int label;
      if (seen.empty()) {
        label = sets.make();
      } else {
        label = *std::min_element(seen.begin(), seen.end());
        for (int l : seen) sets.unite(label, l);
      }
      provisional[static_cast<std::size_t>(r) * map.cols + c] = label;
    }
  }

  // Second pass: resolve and renumber densely in scan order.
  std::vector<int> dense(sets.parent.size(), 0);
  for (std::size_t i = 0; i < provisional.size(); ++i) {
    if (provisional[i] < 0) continue;
    const int root = sets.find(provisional[i]);
    if (dense[root] == 0) {
      out.areas.push_back(0);
      dense[root] = static_cast<int>(out.areas.size());
    }
    out.labels[i] = dense[root];
    ++out.areas[dense[root] - 1];
  }
  return out;
}

WeightGrid attributions_to_weights(const AttributionGrid& grid, const WeightParams& params) {
  if (grid.values.empty()) throw Error(ErrorCode::EmptyGrid, "attribution grid is empty");
  if (params.low <= 0 || params.high <= 0) throw Error(ErrorCode::NonPositiveWeight, "weights must be positive");
  const auto map = threshold_percentile(grid, params.percentile);
  const auto comps = connected_components(map, params.connectivity);

  int best = 0;
  for (int k = 1; k <= comps.count(); ++k)
    if (best == 0 || comps.areas[k - 1] > comps.areas[best - 1]) best = k;

  WeightGrid weights{grid.rows, grid.cols, {}};
  weights.values.reserve(grid.values.size());
  for (int label : comps.labels) weights.values.push_back(label == best && best != 0 ? params.low : params.high);
  return weights;
}

WeightGrid uniform_weights(int rows, int cols, int weight) {
  return WeightGrid{rows, cols, std::vector<int>(static_cast<std::size_t>(rows) * cols, weight)};
}

std::string weights_csv(const WeightGrid& weights) {
  std::string out;
  for (int r = 0; r < weights.rows; ++r) {
    for (int c = 0; c < weights.cols; ++c) {
      if (c) out.push_back(',');
      out += std::to_string(weights.at(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

WeightGrid parse_weights_csv(std::string_view text) {
  WeightGrid w;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream cells(line);
    std::string cell;
    int cols = 0;
    while (std::getline(cells, cell, ',')) {
      int v = 0;
      try {
        std::size_t used = 0;
        v = std::stoi(cell, &used);
      } catch (const std::exception&) {
        throw Error(ErrorCode::CorruptFile, "bad weight '" + cell + "'");
      }
      if (v <= 0) throw Error(ErrorCode::NonPositiveWeight, "weights must be positive integers");
      w.values.push_back(v);
      ++cols;
    }
    if (w.rows > 0 && cols != w.cols) throw Error(ErrorCode::RaggedLines, "ragged weight grid");
    w.cols = cols;
    ++w.rows;
  }
  if (w.values.empty()) throw Error(ErrorCode::EmptyGrid, "weight grid is empty");
  return w;
}

std::string heat_grid_svg(int rows, int cols, std::span<const double> values, bool dark_low, int cell_px) {
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = values.empty() ? 0.0 : *lo_it;
  const double hi = values.empty() ? 1.0 : *hi_it;
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" shape-rendering=\"crispEdges\">\n",
                cols * cell_px, rows * cell_px);
  out += buf;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double v = values[static_cast<std::size_t>(r) * cols + c];
      double t = hi > lo ? (v - lo) / (hi - lo) : 1.0;
      if (!dark_low) t = 1.0 - t;
      const int shade = static_cast<int>(std::lround(255.0 * t));
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"rgb(%d,%d,%d)\" stroke=\"#888\"/>\n",
                    c * cell_px, r * cell_px, cell_px, cell_px, shade, shade, shade);
      out += buf;
    }
  }
  out += "</svg>\n";
  return out;
}

}  // namespace levelrepair
