#include "levelrepair/attribution.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "levelrepair/error.hpp"

namespace levelrepair {
namespace {

void check_same_shape(const OneHotTensor& a, const OneHotTensor& b) {
  if (a.rows != b.rows || a.cols != b.cols || a.size() != b.size())
    throw Error(ErrorCode::DimensionMismatch, "input and baseline differ in shape");
}

// Pre-activations of every layer for one input, inference mode.
std::vector<std::vector<double>> pre_activations(const MlpModel& model, std::span<const double> x) {
  std::vector<std::vector<double>> pre;
  std::vector<double> cur(x.begin(), x.end());
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    std::vector<double> z(layer.b);
    for (int o = 0; o < layer.out; ++o) {
      const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
      double acc = 0.0;
      for (int i = 0; i < layer.in; ++i) acc += row[i] * cur[i];
      z[o] += acc;
    }
    pre.push_back(z);
    if (l + 1 < model.layers.size()) {
      for (auto& v : z) v = v > 0.0 ? v : 0.0;
      cur = std::move(z);
    }
  }
  return pre;
}

constexpr double kRescaleEpsilon = 1e-10;

}  // namespace

std::string_view to_string(AttributionMethod method) {
  switch (method) {
    case AttributionMethod::ShapStyle: return "SHAP";
    case AttributionMethod::IntegratedGradients: return "IG";
    case AttributionMethod::Uniform: return "UNI";
  }
  return "?";
}

AttributionMethod parse_attribution_method(std::string_view name) {
  if (name == "SHAP" || name == "shap") return AttributionMethod::ShapStyle;
  if (name == "IG" || name == "ig") return AttributionMethod::IntegratedGradients;
  if (name == "UNI" || name == "uni") return AttributionMethod::Uniform;
  throw Error(ErrorCode::InvalidArgument, "unknown attribution method '" + std::string(name) + "'");
}

double AttributionGrid::total() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

OneHotTensor integrated_gradients_raw(const MlpModel& model, const OneHotTensor& input, int steps,
                                      const OneHotTensor& baseline) {
  check_same_shape(input, baseline);
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "integrated gradients needs at least one step");
  const auto n = input.size();
  std::vector<double> grad_sum(n, 0.0);
  std::vector<double> point(n);
  for (int k = 1; k <= steps; ++k) {
    const double alpha = static_cast<double>(k) / steps;
    for (std::size_t i = 0; i < n; ++i)
      point[i] = baseline.values[i] + alpha * (input.values[i] - baseline.values[i]);
    const auto g = grad_logit(model, point);
    for (std::size_t i = 0; i < n; ++i) grad_sum[i] += g[i];
  }
  OneHotTensor out(input.rows, input.cols);
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] = (input.values[i] - baseline.values[i]) * grad_sum[i] / steps;
  return out;
}

OneHotTensor deeplift_rescale_raw(const MlpModel& model, const OneHotTensor& input, const OneHotTensor& baseline) {
  check_same_shape(input, baseline);
  if (input.size() != static_cast<std::size_t>(model.input_dim()))
    throw Error(ErrorCode::DimensionMismatch, "input does not match model");
  const auto pre_x = pre_activations(model, input.values);
  const auto pre_ref = pre_activations(model, baseline.values);

  // Multipliers of the unsolvable logit with respect to each layer's output.
  std::vector<double> mult{1.0};
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& layer = model.layers[l];
    std::vector<double> in_mult(layer.in, 0.0);
    for (int o = 0; o < layer.out; ++o) {
      if (mult[o] == 0.0) continue;
      const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) in_mult[i] += mult[o] * row[i];
    }
    if (l > 0) {
      const auto& zx = pre_x[l - 1];
      const auto& zr = pre_ref[l - 1];
      for (int i = 0; i < layer.in; ++i) {
        const double dz = zx[i] - zr[i];
        double slope;
        if (std::abs(dz) > kRescaleEpsilon)
          slope = (std::max(zx[i], 0.0) - std::max(zr[i], 0.0)) / dz;
        else
          slope = zx[i] > 0.0 ? 1.0 : 0.0;
        in_mult[i] *= slope;
      }
    }
    mult = std::move(in_mult);
  }

  OneHotTensor out(input.rows, input.cols);
  for (std::size_t i = 0; i < input.size(); ++i) out.values[i] = mult[i] * (input.values[i] - baseline.values[i]);
  return out;
}

AttributionGrid aggregate_channels(const OneHotTensor& raw, AttributionMethod method) {
  AttributionGrid grid;
  grid.rows = raw.rows;
  grid.cols = raw.cols;
  grid.method = method;
  grid.values.assign(static_cast<std::size_t>(raw.rows) * raw.cols, 0.0);
  for (int r = 0; r < raw.rows; ++r)
    for (int c = 0; c < raw.cols; ++c)
      for (int ch = 0; ch < kNumChannels; ++ch) grid.at(r, c) += raw.at(r, c, ch);
  return grid;
}

AttributionGrid integrated_gradients(const MlpModel& model, const Level& level, int steps,
                                     const OneHotTensor& baseline) {
  return aggregate_channels(integrated_gradients_raw(model, to_onehot(level), steps, baseline),
                            AttributionMethod::IntegratedGradients);
}

AttributionGrid integrated_gradients(const MlpModel& model, const Level& level, int steps) {
  return integrated_gradients(model, level, steps, zeros_like(level));
}

AttributionGrid deeplift_rescale(const MlpModel& model, const Level& level, const OneHotTensor& baseline) {
  return aggregate_channels(deeplift_rescale_raw(model, to_onehot(level), baseline), AttributionMethod::ShapStyle);
}

AttributionGrid deeplift_rescale(const MlpModel& model, const Level& level) {
  return deeplift_rescale(model, level, zeros_like(level));
}

AttributionGrid uniform_attribution(const Level& level) {
  AttributionGrid grid;
  grid.rows = level.rows();
  grid.cols = level.cols();
  grid.method = AttributionMethod::Uniform;
  grid.values.assign(level.size(), 1.0);
  return grid;
}

AttributionGrid attribute(AttributionMethod method, const MlpModel* model, const Level& level, int ig_steps) {
  if (method == AttributionMethod::Uniform) return uniform_attribution(level);
  if (!model) throw Error(ErrorCode::InvalidArgument, "attribution method needs a trained model");
  if (method == AttributionMethod::IntegratedGradients) return integrated_gradients(*model, level, ig_steps);
  return deeplift_rescale(*model, level);
}

std::string attribution_csv(const AttributionGrid& grid) {
  std::string out;
  char buf[32];
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", grid.at(r, c));
      if (c) out.push_back(',');
      out += buf;
    }
    out.push_back('\n');
  }
  return out;
}

AttributionGrid parse_attribution_csv(std::string_view text, AttributionMethod method) {
  AttributionGrid grid;
  grid.method = method;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    int cols = 0;
    while (std::getline(cells, cell, ',')) {
      try {
        grid.values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::CorruptFile, "bad attribution value '" + cell + "'");
      }
      ++cols;
    }
    if (grid.rows > 0 && cols != grid.cols) throw Error(ErrorCode::RaggedLines, "ragged attribution grid");
    grid.cols = cols;
    ++grid.rows;
  }
  if (grid.values.empty()) throw Error(ErrorCode::EmptyGrid, "attribution grid is empty");
  return grid;
}

std::string attribution_metadata_json(const AttributionGrid& grid, int steps, const std::string& model_hash) {
  nlohmann::json j{{"method", std::string(to_string(grid.method))},
                   {"baseline", "zeros"},
                   {"steps", grid.method == AttributionMethod::IntegratedGradients ? steps : 0},
                   {"model_hash", model_hash},
                   {"rows", grid.rows},
                   {"cols", grid.cols}};
  return j.dump(2) + "\n";
}

}  // namespace levelrepair
