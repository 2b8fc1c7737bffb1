#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "goalrec/encoding.hpp"
#include "goalrec/error.hpp"
#include "goalrec/random.hpp"

namespace goalrec {

enum class Activation { kRelu, kSoftmax };

/// Fully connected layer; `weights` is out x in, row-major.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> biases;
  Activation activation = Activation::kRelu;
  double drop_rate = 0.0;  // inverted dropout on this layer's output while training
};

struct MlpModel {
  std::vector<DenseLayer> layers;
  std::uint64_t seed = 0;

  std::size_t input_size() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t output_size() const { return layers.empty() ? 0 : layers.back().out; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.biases.size();
    return n;
  }

  void validate() const {
    if (layers.empty()) throw InvalidArgument("model has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.in == 0 || l.out == 0) throw InvalidArgument("zero-size layer");
      if (l.weights.size() != l.in * l.out || l.biases.size() != l.out)
        throw InvalidArgument("layer parameter shapes are inconsistent");
      if (i > 0 && layers[i - 1].out != l.in) throw InvalidArgument("layer dimensions do not chain");
      const bool last = i + 1 == layers.size();
      if ((l.activation == Activation::kSoftmax) != last)
        throw InvalidArgument("exactly the final layer must use softmax");
      if (!(l.drop_rate >= 0.0 && l.drop_rate < 1.0)) throw InvalidArgument("drop rate must lie in [0,1)");
      if (last && l.drop_rate != 0.0) throw InvalidArgument("dropout is not applied to the output layer");
    }
  }

  void set_hidden_drop_rate(double p) {
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) layers[i].drop_rate = p;
  }
};

/// Glorot-uniform weights, zero biases. `arch` lists the input size followed
/// by every layer's width; the last layer is the softmax output.
inline MlpModel init_mlp(std::span<const std::size_t> arch, std::uint64_t seed, double drop_rate = 0.0) {
  if (arch.size() < 2) throw InvalidArgument("architecture needs an input size and at least one layer");
  if (std::find(arch.begin(), arch.end(), std::size_t{0}) != arch.end())
    throw InvalidArgument("zero-size layer");
  MlpModel m;
  m.seed = seed;
  Rng rng = make_rng(seed, 0x1217);
  for (std::size_t i = 0; i + 1 < arch.size(); ++i) {
    DenseLayer l;
    l.in = arch[i];
    l.out = arch[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    l.weights.resize(l.in * l.out);
    for (auto& w : l.weights) w = (2.0 * unit_uniform(rng) - 1.0) * limit;
    l.biases.assign(l.out, 0.0);
    const bool last = i + 2 == arch.size();
    l.activation = last ? Activation::kSoftmax : Activation::kRelu;
    l.drop_rate = last ? 0.0 : drop_rate;
    m.layers.push_back(std::move(l));
  }
  m.validate();
  return m;
}
inline MlpModel init_mlp(std::initializer_list<std::size_t> arch, std::uint64_t seed,
                         double drop_rate = 0.0) {
  return init_mlp(std::span<const std::size_t>(arch.begin(), arch.size()), seed, drop_rate);
}

enum class Mode { kTrain, kInfer };

/// Everything backward() needs from one forward evaluation.
struct ForwardPass {
  std::vector<std::vector<double>> inputs;  // input of each layer
  std::vector<std::vector<double>> pre;     // pre-activation of each layer
  std::vector<std::vector<double>> masks;   // per-unit dropout scale, empty when unused
  std::vector<double> output;               // softmax probabilities
};

inline void softmax_inplace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
}

inline ForwardPass forward_pass(const MlpModel& model, std::span<const double> x, Mode mode,
                                Rng* rng = nullptr) {
  if (x.size() != model.input_size())
    throw InvalidArgument("feature length " + std::to_string(x.size()) + " != model input " +
                          std::to_string(model.input_size()));
  ForwardPass fp;
  const auto n_layers = model.layers.size();
  fp.inputs.reserve(n_layers);
  fp.pre.reserve(n_layers);
  fp.masks.resize(n_layers);
  std::vector<double> a(x.begin(), x.end());
  for (std::size_t li = 0; li < n_layers; ++li) {
    const auto& l = model.layers[li];
    std::vector<double> z(l.biases);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* w = &l.weights[o * l.in];
      double acc = 0.0;
      for (std::size_t i = 0; i < l.in; ++i) acc += w[i] * a[i];
      z[o] += acc;
    }
    fp.inputs.push_back(std::move(a));
    fp.pre.push_back(z);
    if (l.activation == Activation::kSoftmax) {
      softmax_inplace(z);
      fp.output = z;
      break;
    }
    for (auto& v : z) v = v > 0.0 ? v : 0.0;
    if (mode == Mode::kTrain && l.drop_rate > 0.0) {
      if (!rng) throw InvalidArgument("training-mode forward pass needs an RNG for dropout");
      const double keep_scale = 1.0 / (1.0 - l.drop_rate);
      auto& mask = fp.masks[li];
      mask.resize(l.out);
      for (std::size_t o = 0; o < l.out; ++o) {
        mask[o] = unit_uniform(*rng) < l.drop_rate ? 0.0 : keep_scale;
        z[o] *= mask[o];
      }
    }
    a = std::move(z);
  }
  return fp;
}

/// Inference-mode class probabilities.
inline std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
  return forward_pass(model, x, Mode::kInfer).output;
}

/// Categorical cross-entropy, -log(max(p[label], 1e-12)).
inline double loss(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) throw InvalidArgument("label out of range");
  return -std::log(std::max(probs[label], 1e-12));
}

/// Parameter-shaped gradient buffers.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static Gradients zeros_like(const MlpModel& m) {
    Gradients g;
    for (const auto& l : m.layers) {
      g.weights.emplace_back(l.weights.size(), 0.0);
      g.biases.emplace_back(l.biases.size(), 0.0);
    }
    return g;
  }

  void scale(double s) {
    for (auto& w : weights)
      for (auto& v : w) v *= s;
    for (auto& b : biases)
      for (auto& v : b) v *= s;
  }
};

/// Adds d(loss)/d(params) for one example to `grads`, reusing the ReLU and
/// dropout masks recorded in `fp`.
inline void accumulate_backward(const MlpModel& model, const ForwardPass& fp, std::size_t label,
                                Gradients& grads) {
  const auto n_layers = model.layers.size();
  if (label >= model.output_size()) throw InvalidArgument("label out of range");
  std::vector<double> delta = fp.output;
  delta[label] -= 1.0;
  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& l = model.layers[li];
    const auto& in = fp.inputs[li];
    auto& gw = grads.weights[li];
    auto& gb = grads.biases[li];
    for (std::size_t o = 0; o < l.out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* row = &gw[o * l.in];
      for (std::size_t i = 0; i < l.in; ++i) row[i] += d * in[i];
    }
    if (li == 0) break;
    std::vector<double> prev(l.in, 0.0);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = &l.weights[o * l.in];
      for (std::size_t i = 0; i < l.in; ++i) prev[i] += w[i] * d;
    }
    const auto& below_pre = fp.pre[li - 1];
    const auto& below_mask = fp.masks[li - 1];
    for (std::size_t i = 0; i < l.in; ++i) {
      if (below_pre[i] <= 0.0) prev[i] = 0.0;
      else if (!below_mask.empty()) prev[i] *= below_mask[i];
    }
    delta = std::move(prev);
  }
}

inline Gradients backward(const MlpModel& model, const ForwardPass& fp, std::size_t label) {
  auto g = Gradients::zeros_like(model);
  accumulate_backward(model, fp, label, g);
  return g;
}

/// Gradients of the inference-mode loss (no dropout).
inline Gradients backward(const MlpModel& model, std::span<const double> x, std::size_t label) {
  return backward(model, forward_pass(model, x, Mode::kInfer), label);
}

/// Bias-corrected Adam without weight decay.
struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

/// One Adam update over parameter blocks `params` with matching `grads`.
inline void adam_update(AdamState& st, std::span<const std::span<double>> params,
                        std::span<const std::span<const double>> grads) {
  if (params.size() != grads.size()) throw InvalidArgument("parameter/gradient block count mismatch");
  if (st.m.empty()) {
    for (const auto& p : params) {
      st.m.emplace_back(p.size(), 0.0);
      st.v.emplace_back(p.size(), 0.0);
    }
  }
  if (st.m.size() != params.size()) throw InvalidArgument("optimizer state shape mismatch");
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    auto g = grads[b];
    auto& m = st.m[b];
    auto& v = st.v[b];
    if (p.size() != g.size() || m.size() != p.size()) throw InvalidArgument("parameter/gradient shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * g[i];
      v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

inline void adam_step(AdamState& st, MlpModel& model, const Gradients& grads) {
  std::vector<std::span<double>> ps;
  std::vector<std::span<const double>> gs;
  if (grads.weights.size() != model.layers.size()) throw InvalidArgument("gradient shape mismatch");
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    ps.emplace_back(model.layers[i].weights);
    gs.emplace_back(grads.weights[i]);
    ps.emplace_back(model.layers[i].biases);
    gs.emplace_back(grads.biases[i]);
  }
  adam_update(st, ps, gs);
}

struct TrainConfig {
  std::size_t epochs = 15;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::optional<double> drop_rate;  // overrides the model's hidden drop rates when set

  void validate() const {
    if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
    if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
  }
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean training-mode loss per epoch
  AdamState optimizer;
};

/// Mini-batch Adam on mean cross-entropy. Deterministic in config.seed: the
/// example order is reshuffled each epoch and dropout masks come from the same
/// seeded stream.
inline TrainResult train(MlpModel& model, std::span<const EncodedExample> data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw InvalidArgument("training set is empty");
  if (cfg.drop_rate) model.set_hidden_drop_rate(*cfg.drop_rate);
  model.validate();
  for (const auto& ex : data) {
    if (ex.features.size() != model.input_size()) throw InvalidArgument("inconsistent feature length");
    if (ex.label >= model.output_size()) throw InvalidArgument("label out of range");
  }

  TrainResult res;
  Rng rng = make_rng(cfg.seed, 0x7EA1);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  auto grads = Gradients::zeros_like(model);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto end = std::min(order.size(), start + cfg.batch_size);
      for (auto& w : grads.weights) std::fill(w.begin(), w.end(), 0.0);
      for (auto& b : grads.biases) std::fill(b.begin(), b.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = data[order[k]];
        const auto fp = forward_pass(model, ex.features, Mode::kTrain, &rng);
        total += loss(fp.output, ex.label);
        accumulate_backward(model, fp, ex.label, grads);
      }
      grads.scale(1.0 / static_cast<double>(end - start));
      adam_step(res.optimizer, model, grads);
    }
    res.epoch_loss.push_back(total / static_cast<double>(data.size()));
  }
  return res;
}

/// Top-1 goal; exact ties are broken by a uniform draw among the tied indices.
inline std::size_t predict_goal(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw InvalidArgument("empty distribution");
  const double best = *std::max_element(probs.begin(), probs.end());
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] == best) tied.push_back(i);
  if (tied.size() == 1) return tied[0];
  return tied[uniform_index(rng, tied.size())];
}

// ---- Serialization ----------------------------------------------------------

inline nlohmann::json to_json(const MlpModel& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers)
    layers.push_back({{"in", l.in},
                      {"out", l.out},
                      {"activation", l.activation == Activation::kRelu ? "relu" : "softmax"},
                      {"drop_rate", l.drop_rate},
                      {"weights", l.weights},
                      {"biases", l.biases}});
  return {{"format", "goalrec-mlp"}, {"version", 1}, {"seed", m.seed}, {"layers", layers}};
}

inline MlpModel mlp_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "goalrec-mlp" || j.value("version", 0) != 1)
    throw ParseError("not a version-1 goalrec-mlp model");
  MlpModel m;
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& jl : j.at("layers")) {
    DenseLayer l;
    l.in = jl.at("in").get<std::size_t>();
    l.out = jl.at("out").get<std::size_t>();
    const auto act = jl.at("activation").get<std::string>();
    if (act != "relu" && act != "softmax") throw ParseError("unknown activation " + act);
    l.activation = act == "relu" ? Activation::kRelu : Activation::kSoftmax;
    l.drop_rate = jl.at("drop_rate").get<double>();
    l.weights = jl.at("weights").get<std::vector<double>>();
    l.biases = jl.at("biases").get<std::vector<double>>();
    m.layers.push_back(std::move(l));
  }
  m.validate();
  return m;
}

inline void save_mlp(const MlpModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file: " + path);
  out << to_json(m).dump() << '\n';
}

inline MlpModel load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file: " + path);
  try {
    return mlp_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace goalrec
