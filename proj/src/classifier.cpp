#include "levelrepair/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "levelrepair/error.hpp"
#include "levelrepair/rng.hpp"

namespace levelrepair {
namespace {

using nlohmann::json;

struct Activations {
  // pre[l] = pre-activation of layer l, post[l] = input of layer l.
  std::vector<std::vector<double>> post;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> mask;  // dropout scale per hidden unit, empty at inference
};

void check_input(const MlpModel& model, std::size_t n) {
  if (n != static_cast<std::size_t>(model.input_dim()))
    throw Error(ErrorCode::DimensionMismatch, "input has " + std::to_string(n) + " entries, model expects " +
                                                  std::to_string(model.input_dim()));
}

void affine(const DenseLayer& layer, std::span<const double> x, std::vector<double>& z) {
  z.assign(layer.b.begin(), layer.b.end());
  for (int o = 0; o < layer.out; ++o) {
    const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
    double acc = 0.0;
    for (int i = 0; i < layer.in; ++i) acc += row[i] * x[i];
    z[o] += acc;
  }
}

double run(const MlpModel& model, std::span<const double> x, Activations* acts, Rng* dropout_rng) {
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> z;
  const auto n = model.layers.size();
  const double keep = 1.0 - model.dropout;
  for (std::size_t l = 0; l < n; ++l) {
    affine(model.layers[l], cur, z);
    if (acts) {
      acts->post.push_back(cur);
      acts->pre.push_back(z);
    }
    if (l + 1 == n) break;
    for (auto& v : z) v = v > 0.0 ? v : 0.0;
    if (dropout_rng && model.dropout > 0.0) {
      std::vector<double> mask(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) {
        mask[i] = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
        z[i] *= mask[i];
      }
      if (acts) acts->mask.push_back(std::move(mask));
    }
    cur.swap(z);
  }
  return z.front();
}

// Backpropagates d loss / d logit = `dlogit` through cached activations.
// Accumulates parameter gradients into `grads` when non-null, returns the
// gradient with respect to the input.
std::vector<double> backprop(const MlpModel& model, const Activations& acts, double dlogit,
                             std::vector<DenseLayer>* grads) {
  std::vector<double> delta{dlogit};
  std::vector<double> prev;
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& layer = model.layers[l];
    const auto& input = acts.post[l];
    if (grads) {
      auto& g = (*grads)[l];
      for (int o = 0; o < layer.out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        g.b[o] += d;
        double* row = g.w.data() + static_cast<std::size_t>(o) * layer.in;
        for (int i = 0; i < layer.in; ++i) row[i] += d * input[i];
      }
    }
    prev.assign(layer.in, 0.0);
    for (int o = 0; o < layer.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) prev[i] += d * row[i];
    }
    if (l > 0) {
      const auto& z = acts.pre[l - 1];
      for (std::size_t i = 0; i < prev.size(); ++i) {
        if (z[i] <= 0.0) prev[i] = 0.0;
        else if (!acts.mask.empty()) prev[i] *= acts.mask[l - 1][i];
      }
    }
    delta.swap(prev);
  }
  return delta;
}

double bce_with_logit(double z, int label) {
  return std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

MlpModel init_model(std::vector<int> dims, std::uint64_t seed, double dropout) {
  if (dims.size() < 2 || dims.back() != 1)
    throw Error(ErrorCode::InvalidArgument, "model needs an input dimension and a single output");
  for (int d : dims)
    if (d <= 0) throw Error(ErrorCode::InvalidArgument, "layer widths must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw Error(ErrorCode::InvalidArgument, "dropout must be in [0,1)");

  MlpModel m;
  m.dims = std::move(dims);
  m.dropout = dropout;
  m.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < m.dims.size(); ++l) {
    DenseLayer layer;
    layer.in = m.dims[l];
    layer.out = m.dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
    for (auto& w : layer.w) w = (2.0 * rng.uniform() - 1.0) * bound;
    layer.b.assign(layer.out, 0.0);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

MlpModel init_model(int rows, int cols, int hidden1, int hidden2, std::uint64_t seed, double dropout) {
  return init_model({rows * cols * kNumChannels, hidden1, hidden2, 1}, seed, dropout);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(const MlpModel& model, std::span<const double> x) {
  check_input(model, x.size());
  return run(model, x, nullptr, nullptr);
}

double logit(const MlpModel& model, const OneHotTensor& t) { return logit(model, t.values); }

double forward(const MlpModel& model, const OneHotTensor& t, bool training, std::uint64_t dropout_seed) {
  check_input(model, t.size());
  if (!training) return sigmoid(run(model, t.values, nullptr, nullptr));
  Rng rng(dropout_seed);
  return sigmoid(run(model, t.values, nullptr, &rng));
}

std::vector<double> grad_logit(const MlpModel& model, std::span<const double> x) {
  check_input(model, x.size());
  Activations acts;
  run(model, x, &acts, nullptr);
  return backprop(model, acts, 1.0, nullptr);
}

OneHotTensor grad_input(const MlpModel& model, const OneHotTensor& t) {
  OneHotTensor g(t.rows, t.cols);
  g.values = grad_logit(model, t.values);
  return g;
}

LabeledDataset split_dataset(std::vector<LabeledExample> items, double train_fraction, std::uint64_t seed) {
  if (train_fraction <= 0.0 || train_fraction > 1.0)
    throw Error(ErrorCode::InvalidArgument, "train fraction must be in (0,1]");
  LabeledDataset ds;
  ds.train_fraction = train_fraction;
  Rng rng(seed);
  for (int label : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < items.size(); ++i)
      if (items[i].label == label) idx.push_back(i);
    rng.shuffle(idx);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k)
      (k < n_train ? ds.train : ds.test).push_back(std::move(items[idx[k]]));
  }
  return ds;
}

TrainResult train(MlpModel model, const LabeledDataset& data, const TrainConfig& cfg) {
  if (data.train.empty()) throw Error(ErrorCode::SingleClassDataset, "empty training split");
  const bool has_pos = std::any_of(data.train.begin(), data.train.end(), [](auto& e) { return e.label == 1; });
  const bool has_neg = std::any_of(data.train.begin(), data.train.end(), [](auto& e) { return e.label == 0; });
  if (!has_pos || !has_neg) throw Error(ErrorCode::SingleClassDataset, "training split needs both labels");
  for (const auto& e : data.train) check_input(model, e.input.size());
  if (cfg.batch_size <= 0 || cfg.epochs < 0) throw Error(ErrorCode::InvalidArgument, "bad batch size or epochs");

  auto zero_like = [&] {
    auto g = model.layers;
    for (auto& l : g) {
      std::fill(l.w.begin(), l.w.end(), 0.0);
      std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    return g;
  };
  auto grads = zero_like();
  auto m1 = zero_like();
  auto m2 = zero_like();

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  long step = 0;

  auto adam_update = [&](std::vector<double>& p, std::vector<double>& g, std::vector<double>& m,
                         std::vector<double>& v, double scale) {
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    const double shrink = 1.0 - cfg.learning_rate * cfg.weight_decay;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] * scale;
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      p[i] *= shrink;
      p[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
      g[i] = 0.0;
    }
  };

  TrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto end = std::min(order.size(), start + cfg.batch_size);
      for (auto k = start; k < end; ++k) {
        const auto& ex = data.train[order[k]];
        Activations acts;
        const double z = run(model, ex.input.values, &acts, &rng);
        const double loss = bce_with_logit(z, ex.label);
        if (!std::isfinite(loss)) throw Error(ErrorCode::NonFiniteLoss, "loss diverged at epoch " + std::to_string(epoch));
        loss_sum += loss;
        backprop(model, acts, sigmoid(z) - ex.label, &grads);
      }
      ++step;
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        adam_update(model.layers[l].w, grads[l].w, m1[l].w, m2[l].w, scale);
        adam_update(model.layers[l].b, grads[l].b, m1[l].b, m2[l].b, scale);
      }
    }
    for (const auto& layer : model.layers)
      for (double w : layer.w)
        if (!std::isfinite(w)) throw Error(ErrorCode::NonFiniteLoss, "non-finite parameter");
    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = loss_sum / static_cast<double>(order.size());
    entry.train_acc = evaluate(model, data.train);
    entry.test_acc = data.test.empty() ? std::nan("") : evaluate(model, data.test);
    result.log.push_back(entry);
  }
  result.model = std::move(model);
  return result;
}

double evaluate(const MlpModel& model, std::span<const LabeledExample> data) {
  if (data.empty()) throw Error(ErrorCode::InvalidArgument, "cannot evaluate on an empty set");
  std::size_t correct = 0;
  for (const auto& ex : data) {
    const int predicted = forward(model, ex.input) >= 0.5 ? 1 : 0;
    correct += predicted == ex.label;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,loss,train_acc,test_acc\n";
  char buf[128];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.4f,%.4f\n", e.epoch, e.loss, e.train_acc, e.test_acc);
    out += buf;
  }
  return out;
}

std::string model_to_json(const MlpModel& model) {
  json layers = json::array();
  for (const auto& l : model.layers) {
    json w = json::array();
    for (int o = 0; o < l.out; ++o)
      w.push_back(std::vector<double>(l.w.begin() + static_cast<std::ptrdiff_t>(o) * l.in,
                                      l.w.begin() + static_cast<std::ptrdiff_t>(o + 1) * l.in));
    layers.push_back({{"w", std::move(w)}, {"b", l.b}});
  }
  json j{{"version", kModelFileVersion}, {"dims", model.dims},     {"dropout", model.dropout},
         {"seed", model.seed},           {"layers", std::move(layers)}};
  return j.dump();
}

MlpModel model_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, e.what());
  }
  try {
    const int version = j.at("version").get<int>();
    if (version != kModelFileVersion)
      throw Error(ErrorCode::VersionMismatch, "model file version " + std::to_string(version));
    MlpModel m;
    m.dims = j.at("dims").get<std::vector<int>>();
    m.dropout = j.at("dropout").get<double>();
    m.seed = j.value("seed", std::uint64_t{0});
    const auto& layers = j.at("layers");
    if (m.dims.size() < 2 || layers.size() != m.dims.size() - 1)
      throw Error(ErrorCode::CorruptFile, "layer count does not match dims");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      DenseLayer layer;
      layer.in = m.dims[l];
      layer.out = m.dims[l + 1];
      const auto& w = layers[l].at("w");
      if (w.size() != static_cast<std::size_t>(layer.out)) throw Error(ErrorCode::CorruptFile, "bad weight rows");
      for (const auto& row : w) {
        auto r = row.get<std::vector<double>>();
        if (r.size() != static_cast<std::size_t>(layer.in)) throw Error(ErrorCode::CorruptFile, "bad weight row");
        layer.w.insert(layer.w.end(), r.begin(), r.end());
      }
      layer.b = layers[l].at("b").get<std::vector<double>>();
      if (layer.b.size() != static_cast<std::size_t>(layer.out)) throw Error(ErrorCode::CorruptFile, "bad bias");
      m.layers.push_back(std::move(layer));
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, e.what());
  }
}

void save_model(const MlpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << model_to_json(model) << "\n";
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

std::string model_hash(const MlpModel& model) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : model_to_json(model)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace levelrepair
