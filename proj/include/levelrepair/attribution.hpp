#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "levelrepair/classifier.hpp"
#include "levelrepair/level.hpp"

namespace levelrepair {

enum class AttributionMethod { ShapStyle, IntegratedGradients, Uniform };

/// "SHAP", "IG", "UNI".
std::string_view to_string(AttributionMethod method);
AttributionMethod parse_attribution_method(std::string_view name);

/// One real value per cell, channels already summed.
struct AttributionGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
  AttributionMethod method = AttributionMethod::Uniform;

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * cols + col]; }
  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * cols + col]; }
  double total() const;
};

inline constexpr int kDefaultIgSteps = 128;

/// Per-entry attributions of the unsolvable logit before channel aggregation.
OneHotTensor integrated_gradients_raw(const MlpModel& model, const OneHotTensor& input, int steps,
                                      const OneHotTensor& baseline);
OneHotTensor deeplift_rescale_raw(const MlpModel& model, const OneHotTensor& input, const OneHotTensor& baseline);

AttributionGrid aggregate_channels(const OneHotTensor& raw, AttributionMethod method);

AttributionGrid integrated_gradients(const MlpModel& model, const Level& level, int steps,
                                     const OneHotTensor& baseline);
AttributionGrid integrated_gradients(const MlpModel& model, const Level& level, int steps = kDefaultIgSteps);
AttributionGrid deeplift_rescale(const MlpModel& model, const Level& level, const OneHotTensor& baseline);
AttributionGrid deeplift_rescale(const MlpModel& model, const Level& level);
AttributionGrid uniform_attribution(const Level& level);

/// Dispatches on `method` with the all-zeros baseline.
AttributionGrid attribute(AttributionMethod method, const MlpModel* model, const Level& level,
                          int ig_steps = kDefaultIgSteps);

std::string attribution_csv(const AttributionGrid& grid);
AttributionGrid parse_attribution_csv(std::string_view text, AttributionMethod method);
std::string attribution_metadata_json(const AttributionGrid& grid, int steps, const std::string& model_hash);

}  // namespace levelrepair
