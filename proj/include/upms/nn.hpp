#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "upms/errors.hpp"
#include "upms/rng.hpp"

namespace upms {

// Fully-connected network, tanh hidden activations, identity output head.
// Plain data with explicit reverse-mode gradients; small enough that flat
// vectors beat any framework here.
class DenseNet {
 public:
  struct Layer {
    std::vector<double> weight;  // out x in, row-major
    std::vector<double> bias;    // out
  };

  struct Cache {
    // activations[0] is the input, activations[l+1] the output of layer l
    // (post-tanh for hidden layers).
    std::vector<std::vector<double>> activations;
  };

  struct Gradients {
    std::vector<Layer> layers;

    void zero() {
      for (auto& l : layers) {
        std::fill(l.weight.begin(), l.weight.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
      }
    }
    void scale(double f) {
      for (auto& l : layers) {
        for (auto& v : l.weight) v *= f;
        for (auto& v : l.bias) v *= f;
      }
    }
  };

  DenseNet() = default;

  DenseNet(std::vector<int> sizes, std::uint64_t seed) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw ShapeError("DenseNet needs at least input and output sizes");
    Rng rng(seed);
    layers_.resize(sizes_.size() - 1);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const int fan_in = sizes_[l];
      const int fan_out = sizes_[l + 1];
      const double k = std::sqrt(6.0 / (fan_in + fan_out));
      layers_[l].weight.resize(static_cast<std::size_t>(fan_in) * fan_out);
      layers_[l].bias.assign(static_cast<std::size_t>(fan_out), 0.0);
      for (auto& w : layers_[l].weight) w = (rng.uniform01() * 2.0 - 1.0) * k;
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  Gradients make_gradients() const {
    Gradients g;
    g.layers.resize(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      g.layers[l].weight.assign(layers_[l].weight.size(), 0.0);
      g.layers[l].bias.assign(layers_[l].bias.size(), 0.0);
    }
    return g;
  }

  std::vector<double> forward(std::span<const double> input, Cache* cache = nullptr) const {
    if (static_cast<int>(input.size()) != input_size())
      throw ShapeError("forward: input size " + std::to_string(input.size()) +
                       " != declared " + std::to_string(input_size()));
    std::vector<double> x(input.begin(), input.end());
    if (cache) {
      cache->activations.clear();
      cache->activations.push_back(x);
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const int in = sizes_[l];
      const int out = sizes_[l + 1];
      std::vector<double> y(static_cast<std::size_t>(out));
      for (int o = 0; o < out; ++o) {
        double acc = layers_[l].bias[o];
        const double* wrow = &layers_[l].weight[static_cast<std::size_t>(o) * in];
        for (int i = 0; i < in; ++i) acc += wrow[i] * x[i];
        y[o] = acc;
      }
      if (l + 1 < layers_.size())
        for (auto& v : y) v = std::tanh(v);
      x = std::move(y);
      if (cache) cache->activations.push_back(x);
    }
    return x;
  }

  // Accumulates exact reverse-mode gradients into `grads` and returns the
  // gradient w.r.t. the input.
  std::vector<double> backward(const Cache& cache, std::span<const double> output_grad,
                               Gradients& grads) const {
    if (cache.activations.size() != layers_.size() + 1)
      throw ShapeError("backward: cache does not match network depth");
    if (static_cast<int>(output_grad.size()) != output_size())
      throw ShapeError("backward: output gradient size mismatch");

    std::vector<double> delta(output_grad.begin(), output_grad.end());
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const int in = sizes_[l];
      const int out = sizes_[l + 1];
      const auto& x = cache.activations[l];
      // Hidden layers are tanh; the cached activation is tanh(z).
      if (l + 1 < layers_.size()) {
        const auto& a = cache.activations[l + 1];
        for (int o = 0; o < out; ++o) delta[o] *= 1.0 - a[o] * a[o];
      }
      auto& gl = grads.layers[l];
      for (int o = 0; o < out; ++o) {
        gl.bias[o] += delta[o];
        double* grow = &gl.weight[static_cast<std::size_t>(o) * in];
        for (int i = 0; i < in; ++i) grow[i] += delta[o] * x[i];
      }
      std::vector<double> prev(static_cast<std::size_t>(in), 0.0);
      for (int o = 0; o < out; ++o) {
        const double* wrow = &layers_[l].weight[static_cast<std::size_t>(o) * in];
        for (int i = 0; i < in; ++i) prev[i] += wrow[i] * delta[o];
      }
      delta = std::move(prev);
    }
    return delta;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  bool finite() const {
    for (const auto& l : layers_) {
      for (double v : l.weight)
        if (!std::isfinite(v)) return false;
      for (double v : l.bias)
        if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void serialize(std::ostream& out) const {
    const std::uint32_t depth = static_cast<std::uint32_t>(sizes_.size());
    out.write(reinterpret_cast<const char*>(&depth), sizeof(depth));
    for (int s : sizes_) {
      const std::int32_t v = s;
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    for (const auto& l : layers_) {
      out.write(reinterpret_cast<const char*>(l.weight.data()),
                static_cast<std::streamsize>(l.weight.size() * sizeof(double)));
      out.write(reinterpret_cast<const char*>(l.bias.data()),
                static_cast<std::streamsize>(l.bias.size() * sizeof(double)));
    }
  }

  static DenseNet deserialize(std::istream& in) {
    std::uint32_t depth = 0;
    in.read(reinterpret_cast<char*>(&depth), sizeof(depth));
    if (!in || depth < 2 || depth > 64) throw ParseError("checkpoint: bad network depth");
    std::vector<int> sizes(depth);
    for (auto& s : sizes) {
      std::int32_t v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      if (!in || v <= 0) throw ParseError("checkpoint: bad layer size");
      s = v;
    }
    DenseNet net;
    net.sizes_ = std::move(sizes);
    net.layers_.resize(net.sizes_.size() - 1);
    for (std::size_t l = 0; l < net.layers_.size(); ++l) {
      auto& layer = net.layers_[l];
      layer.weight.resize(static_cast<std::size_t>(net.sizes_[l]) * net.sizes_[l + 1]);
      layer.bias.resize(static_cast<std::size_t>(net.sizes_[l + 1]));
      in.read(reinterpret_cast<char*>(layer.weight.data()),
              static_cast<std::streamsize>(layer.weight.size() * sizeof(double)));
      in.read(reinterpret_cast<char*>(layer.bias.data()),
              static_cast<std::streamsize>(layer.bias.size() * sizeof(double)));
      if (!in) throw ParseError("checkpoint: truncated parameter data");
    }
    return net;
  }

  bool operator==(const DenseNet& other) const {
    if (sizes_ != other.sizes_) return false;
    for (std::size_t l = 0; l < layers_.size(); ++l)
      if (std::memcmp(layers_[l].weight.data(), other.layers_[l].weight.data(),
                      layers_[l].weight.size() * sizeof(double)) != 0 ||
          std::memcmp(layers_[l].bias.data(), other.layers_[l].bias.data(),
                      layers_[l].bias.size() * sizeof(double)) != 0)
        return false;
    return true;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Layer> layers_;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment optimizer; accumulators mirror the parameter layout.
class Adam {
 public:
  Adam() = default;
  Adam(const DenseNet& net, AdamConfig cfg) : cfg_(cfg) {
    m_ = net.make_gradients();
    v_ = net.make_gradients();
  }

  const AdamConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return t_; }

  void step(DenseNet& net, const DenseNet::Gradients& grads) {
    t_ += 1;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      update(net.layers()[l].weight, grads.layers[l].weight, m_.layers[l].weight,
             v_.layers[l].weight, bc1, bc2);
      update(net.layers()[l].bias, grads.layers[l].bias, m_.layers[l].bias,
             v_.layers[l].bias, bc1, bc2);
    }
    if (!net.finite())
      throw DivergenceError("non-finite network parameters after optimizer step " +
                            std::to_string(t_));
  }

 private:
  void update(std::vector<double>& params, const std::vector<double>& g,
              std::vector<double>& m, std::vector<double>& v, double bc1, double bc2) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      params[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }

  AdamConfig cfg_;
  DenseNet::Gradients m_, v_;
  std::int64_t t_ = 0;
};

// Compares reverse-mode gradients against central finite differences.
// `loss` must be a pure function of the network output.
inline double gradient_check(const DenseNet& net, std::span<const double> input,
                             const std::function<double(std::span<const double>)>& loss,
                             const std::function<std::vector<double>(std::span<const double>)>&
                                 loss_grad,
                             double fd_step = 1e-5) {
  DenseNet work = net;
  DenseNet::Cache cache;
  auto out = work.forward(input, &cache);
  auto analytic = work.make_gradients();
  auto dloss = loss_grad(out);
  work.backward(cache, dloss, analytic);

  double max_rel_err = 0.0;
  for (std::size_t l = 0; l < work.layers().size(); ++l) {
    auto check_param = [&](std::vector<double>& params, const std::vector<double>& grad) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + fd_step;
        const double up = loss(work.forward(input));
        params[i] = saved - fd_step;
        const double down = loss(work.forward(input));
        params[i] = saved;
        const double numeric = (up - down) / (2.0 * fd_step);
        const double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-8});
        max_rel_err = std::max(max_rel_err, std::abs(numeric - grad[i]) / denom);
      }
    };
    check_param(work.layers()[l].weight, analytic.layers[l].weight);
    check_param(work.layers()[l].bias, analytic.layers[l].bias);
  }
  return max_rel_err;
}

}  // namespace upms
