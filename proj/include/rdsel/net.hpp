#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rdsel/errors.hpp"
#include "rdsel/matrix.hpp"
#include "rdsel/rng.hpp"

namespace rdsel {

// Output head of a feed-forward net. Hidden layers are always tanh.
enum class Activation { identity, sigmoid, softmax };

enum class Direction { descent, ascent };

// Fully connected net with explicit forward/backward passes. Batches are
// row vectors: layer l maps (n x dims[l]) to (n x dims[l+1]) via
// a_{l+1} = act(a_l * W_l + b_l).
struct MlpNetwork {
  std::vector<std::size_t> layer_dims;
  std::vector<Matrix> weights;  // weights[l]: dims[l] x dims[l+1]
  std::vector<Matrix> biases;   // biases[l]:  1 x dims[l+1]
  Activation output = Activation::identity;

  std::size_t n_layers() const { return weights.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
      n += weights[l].data.size() + biases[l].data.size();
    return n;
  }
};

// Per-parameter gradients mirroring an MlpNetwork's shape.
struct GradientSet {
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;

  GradientSet() = default;
  explicit GradientSet(const MlpNetwork& net) {
    weights.reserve(net.n_layers());
    biases.reserve(net.n_layers());
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
      weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
      biases.emplace_back(1, net.biases[l].cols);
    }
  }

  void add(const GradientSet& o, double alpha = 1.0) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      axpy(weights[l], alpha, o.weights[l]);
      axpy(biases[l], alpha, o.biases[l]);
    }
  }

  void scale(double alpha) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
      for (double& v : weights[l].data) v *= alpha;
      for (double& v : biases[l].data) v *= alpha;
    }
  }
};

// Glorot uniform: weights in +-sqrt(6 / (fan_in + fan_out)), biases zero.
inline MlpNetwork xavier_init(const std::vector<std::size_t>& layer_dims, Rng& rng,
                              Activation output = Activation::identity) {
  if (layer_dims.size() < 2)
    throw ConfigError("xavier_init: need at least an input and an output dimension");
  for (std::size_t d : layer_dims)
    if (d < 1) throw ConfigError("xavier_init: all layer dimensions must be >= 1");
  MlpNetwork net;
  net.layer_dims = layer_dims;
  net.output = output;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const std::size_t fan_in = layer_dims[l];
    const std::size_t fan_out = layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(1, fan_out);
  }
  return net;
}

inline MlpNetwork xavier_init(const std::vector<std::size_t>& layer_dims, std::uint64_t seed,
                              Activation output = Activation::identity) {
  Rng rng(seed);
  return xavier_init(layer_dims, rng, output);
}

// All layer outputs, post-activation. activations[0] is the input batch,
// activations[l+1] the output of layer l.
struct ForwardPass {
  std::vector<Matrix> activations;
  const Matrix& out() const { return activations.back(); }
};

inline ForwardPass forward(const MlpNetwork& net, const Matrix& input) {
  if (input.cols != net.input_dim())
    throw DimensionError("forward: input has " + std::to_string(input.cols) +
                         " columns, net expects " + std::to_string(net.input_dim()));
  ForwardPass pass;
  pass.activations.reserve(net.n_layers() + 1);
  pass.activations.push_back(input);
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    Matrix z = matmul(pass.activations.back(), net.weights[l]);
    for (std::size_t i = 0; i < z.rows; ++i) {
      double* zi = z.row(i);
      const double* b = net.biases[l].row(0);
      for (std::size_t j = 0; j < z.cols; ++j) zi[j] += b[j];
    }
    const bool last = (l + 1 == net.n_layers());
    if (!last) {
      for (double& v : z.data) v = std::tanh(v);
    } else {
      switch (net.output) {
        case Activation::identity:
          break;
        case Activation::sigmoid:
          for (double& v : z.data) v = 1.0 / (1.0 + std::exp(-v));
          break;
        case Activation::softmax:
          for (std::size_t i = 0; i < z.rows; ++i) {
            double* zi = z.row(i);
            double m = zi[0];
            for (std::size_t j = 1; j < z.cols; ++j) m = std::max(m, zi[j]);
            double sum = 0.0;
            for (std::size_t j = 0; j < z.cols; ++j) {
              zi[j] = std::exp(zi[j] - m);
              sum += zi[j];
            }
            for (std::size_t j = 0; j < z.cols; ++j) zi[j] /= sum;
          }
          break;
      }
    }
    pass.activations.push_back(std::move(z));
  }
  return pass;
}

// Backpropagates out_grad (dL/d output activations) through the pass.
// Parameter gradients are accumulated into `grads`; the return value is
// dL/d input, so composed networks chain by feeding it onward.
inline Matrix backward(const MlpNetwork& net, const ForwardPass& pass, const Matrix& out_grad,
                       GradientSet& grads) {
  if (pass.activations.size() != net.n_layers() + 1)
    throw DimensionError("backward: pass does not match network depth");
  if (!out_grad.same_shape(pass.out()))
    throw DimensionError("backward: output gradient shape mismatch");
  Matrix grad = out_grad;  // dL/d activation of the current layer
  for (std::size_t l = net.n_layers(); l-- > 0;) {
    const Matrix& act = pass.activations[l + 1];
    const bool last = (l + 1 == net.n_layers());
    Matrix dz = grad;
    if (!last) {
      for (std::size_t i = 0; i < dz.data.size(); ++i)
        dz.data[i] *= 1.0 - act.data[i] * act.data[i];
    } else {
      switch (net.output) {
        case Activation::identity:
          break;
        case Activation::sigmoid:
          for (std::size_t i = 0; i < dz.data.size(); ++i)
            dz.data[i] *= act.data[i] * (1.0 - act.data[i]);
          break;
        case Activation::softmax:
          // dz = y .* (g - <g, y>) row-wise
          for (std::size_t i = 0; i < dz.rows; ++i) {
            const double* y = act.row(i);
            const double* g = grad.row(i);
            double dot = 0.0;
            for (std::size_t j = 0; j < dz.cols; ++j) dot += g[j] * y[j];
            double* d = dz.row(i);
            for (std::size_t j = 0; j < dz.cols; ++j) d[j] = y[j] * (g[j] - dot);
          }
          break;
      }
    }
    axpy(grads.weights[l], 1.0, matmul_tn(pass.activations[l], dz));
    for (std::size_t i = 0; i < dz.rows; ++i) {
      const double* di = dz.row(i);
      double* b = grads.biases[l].row(0);
      for (std::size_t j = 0; j < dz.cols; ++j) b[j] += di[j];
    }
    grad = matmul_nt(dz, net.weights[l]);
  }
  return grad;
}

// theta <- theta -/+ rate * grad. Throws on non-finite gradients or
// parameters, naming the layer.
inline void apply_update(MlpNetwork& net, const GradientSet& grads, double rate, Direction dir) {
  if (grads.weights.size() != net.n_layers())
    throw DimensionError("apply_update: gradient set does not match network");
  const double step = (dir == Direction::ascent) ? rate : -rate;
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    if (!all_finite(grads.weights[l]) || !all_finite(grads.biases[l]))
      throw NumericalError("apply_update: non-finite gradient in layer " + std::to_string(l));
    axpy(net.weights[l], step, grads.weights[l]);
    axpy(net.biases[l], step, grads.biases[l]);
    if (!all_finite(net.weights[l]) || !all_finite(net.biases[l]))
      throw NumericalError("apply_update: non-finite parameter in layer " + std::to_string(l));
  }
}

}  // namespace rdsel
