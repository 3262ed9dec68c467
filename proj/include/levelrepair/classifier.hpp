#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "levelrepair/level.hpp"

namespace levelrepair {

/// Fully connected layer, `w` is out x in row-major.
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;
  std::vector<double> b;

  double weight(int o, int i) const { return w[static_cast<std::size_t>(o) * in + i]; }
};

/// Stack of dense layers with ReLU (and dropout while training) between them
/// and a single output logit. The probability head is sigmoid(logit) and is
/// read as P(unsolvable).
struct MlpModel {
  std::vector<int> dims;
  std::vector<DenseLayer> layers;
  double dropout = 0.2;
  std::uint64_t seed = 0;

  int input_dim() const { return dims.front(); }
};

inline constexpr int kDefaultHidden1 = 256;
inline constexpr int kDefaultHidden2 = 128;
inline constexpr double kDefaultDropout = 0.2;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
MlpModel init_model(std::vector<int> dims, std::uint64_t seed, double dropout = kDefaultDropout);
MlpModel init_model(int rows, int cols, int hidden1, int hidden2, std::uint64_t seed,
                    double dropout = kDefaultDropout);

double sigmoid(double z);

/// Inference-mode logit for a flat input vector.
double logit(const MlpModel& model, std::span<const double> x);
double logit(const MlpModel& model, const OneHotTensor& t);

/// P(unsolvable). Inference is deterministic; with `training` set, dropout
/// masks are drawn from `dropout_seed`.
double forward(const MlpModel& model, const OneHotTensor& t, bool training = false,
               std::uint64_t dropout_seed = 0);

/// Exact d logit / d x by reverse mode, inference mode.
std::vector<double> grad_logit(const MlpModel& model, std::span<const double> x);
OneHotTensor grad_input(const MlpModel& model, const OneHotTensor& t);

/// label 1 = unsolvable.
struct LabeledExample {
  OneHotTensor input;
  int label = 0;
};

struct LabeledDataset {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
  double train_fraction = 0.8;
};

/// Stratified, seeded split.
LabeledDataset split_dataset(std::vector<LabeledExample> items, double train_fraction, std::uint64_t seed);

struct TrainConfig {
  double learning_rate = 1e-2;
  double weight_decay = 1e-3;
  int epochs = 10;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochLog> log;
};

TrainResult train(MlpModel model, const LabeledDataset& data, const TrainConfig& cfg);

/// Fraction correct with p >= 0.5 read as unsolvable.
double evaluate(const MlpModel& model, std::span<const LabeledExample> data);

std::string training_log_csv(const std::vector<EpochLog>& log);

inline constexpr int kModelFileVersion = 1;

std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(std::string_view text);
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);
/// FNV-1a of the serialized parameters, hex.
std::string model_hash(const MlpModel& model);

}  // namespace levelrepair
