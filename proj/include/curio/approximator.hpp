#pragma once

// Fully connected rectifier networks with hand-written backpropagation and an
// adaptive-moment optimizer. Templated on the scalar so gradient checks can
// run in double while training runs in float.

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace curio {

enum class OutputActivation { identity, bounded };

struct MlpSpec {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<int> hidden_layers{64, 64};
  OutputActivation output_activation = OutputActivation::identity;
  // Per-output scale for the bounded activation: y = scale * tanh(z).
  std::vector<double> output_scale;

  void validate() const {
    if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("mlp: dims must be >= 1");
    if (hidden_layers.empty()) throw std::invalid_argument("mlp: at least one hidden layer required");
    for (int w : hidden_layers) {
      if (w < 1) throw std::invalid_argument("mlp: hidden widths must be >= 1");
    }
    if (output_activation == OutputActivation::bounded &&
        static_cast<int>(output_scale.size()) != output_dim) {
      throw std::invalid_argument("mlp: bounded output needs one scale per output");
    }
  }

  int layer_count() const { return static_cast<int>(hidden_layers.size()) + 1; }
  int layer_in(int l) const { return l == 0 ? input_dim : hidden_layers[static_cast<std::size_t>(l - 1)]; }
  int layer_out(int l) const {
    return l == layer_count() - 1 ? output_dim : hidden_layers[static_cast<std::size_t>(l)];
  }

  // Offset of layer l's weight block; its bias follows the weights.
  std::size_t layer_offset(int l) const {
    std::size_t off = 0;
    for (int k = 0; k < l; ++k) {
      off += static_cast<std::size_t>(layer_out(k)) * static_cast<std::size_t>(layer_in(k) + 1);
    }
    return off;
  }

  std::size_t param_count() const { return layer_offset(layer_count()); }

  bool operator==(const MlpSpec&) const = default;
};

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Vectorized kernels peel according to the start address, so buffers mapped as
// Eigen views need the same alignment on every run for reproducible sums.
template <class T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

// Flat weights and biases. Layer l stores a column-major (out x in) weight
// matrix followed by an out-length bias.
template <class T>
struct ParameterSet {
  AlignedVector<T> values;

  ParameterSet() = default;
  explicit ParameterSet(const MlpSpec& spec) : values(spec.param_count(), T(0)) {}

  Eigen::Map<Matrix<T>> weight(const MlpSpec& spec, int l) {
    return {values.data() + spec.layer_offset(l), spec.layer_out(l), spec.layer_in(l)};
  }
  Eigen::Map<const Matrix<T>> weight(const MlpSpec& spec, int l) const {
    return {values.data() + spec.layer_offset(l), spec.layer_out(l), spec.layer_in(l)};
  }
  Eigen::Map<Vector<T>> bias(const MlpSpec& spec, int l) {
    const std::size_t n = static_cast<std::size_t>(spec.layer_out(l)) * static_cast<std::size_t>(spec.layer_in(l));
    return {values.data() + spec.layer_offset(l) + n, spec.layer_out(l)};
  }
  Eigen::Map<const Vector<T>> bias(const MlpSpec& spec, int l) const {
    const std::size_t n = static_cast<std::size_t>(spec.layer_out(l)) * static_cast<std::size_t>(spec.layer_in(l));
    return {values.data() + spec.layer_offset(l) + n, spec.layer_out(l)};
  }

  bool finite() const {
    for (T v : values) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  template <class U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    out.values.assign(values.begin(), values.end());
    return out;
  }
};

// Uniform fan-in initialization; the output layer is scaled by `final_scale`.
template <class T, class Rng>
ParameterSet<T> init_parameters(const MlpSpec& spec, Rng& rng, double final_scale = 1.0) {
  spec.validate();
  ParameterSet<T> p(spec);
  for (int l = 0; l < spec.layer_count(); ++l) {
    double bound = 1.0 / std::sqrt(static_cast<double>(spec.layer_in(l)));
    if (l == spec.layer_count() - 1) bound *= final_scale;
    std::uniform_real_distribution<double> u(-bound, bound);
    auto w = p.weight(spec, l);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(u(rng));
    auto b = p.bias(spec, l);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = static_cast<T>(u(rng));
  }
  return p;
}

// Activations kept for backpropagation. Columns are batch entries.
template <class T>
struct ForwardCache {
  Matrix<T> input;
  std::vector<Matrix<T>> activations;  // post-activation output of each hidden layer
  Matrix<T> output_pre;                // final layer before the output activation
  Matrix<T> output;
};

template <class T>
Matrix<T> forward_batch(const MlpSpec& spec, const ParameterSet<T>& params, const Matrix<T>& input,
                        ForwardCache<T>* cache = nullptr) {
  if (input.rows() != spec.input_dim) throw std::domain_error("mlp forward: input dimension mismatch");
  if (params.values.size() != spec.param_count()) throw std::domain_error("mlp forward: parameter count mismatch");
  const int last = spec.layer_count() - 1;
  Matrix<T> h = input;
  if (cache) {
    cache->input = input;
    cache->activations.clear();
  }
  for (int l = 0; l < last; ++l) {
    Matrix<T> z = params.weight(spec, l) * h;
    z.colwise() += params.bias(spec, l);
    h = z.cwiseMax(T(0));
    if (cache) cache->activations.push_back(h);
  }
  Matrix<T> z = params.weight(spec, last) * h;
  z.colwise() += params.bias(spec, last);
  Matrix<T> y = z;
  if (spec.output_activation == OutputActivation::bounded) {
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const T s = static_cast<T>(spec.output_scale[static_cast<std::size_t>(r)]);
      y.row(r) = s * z.row(r).array().tanh();
    }
  }
  if (cache) {
    cache->output_pre = std::move(z);
    cache->output = y;
  }
  return y;
}

template <class T>
struct Gradients {
  ParameterSet<T> params;
  Matrix<T> input;  // d objective / d input, one column per batch entry
};

// Given d objective / d output for every batch column, returns the parameter
// gradient summed over the batch and the per-column input gradient.
template <class T>
Gradients<T> backward_batch(const MlpSpec& spec, const ParameterSet<T>& params, const ForwardCache<T>& cache,
                            const Matrix<T>& output_grad) {
  if (output_grad.rows() != spec.output_dim || output_grad.cols() != cache.output.cols()) {
    throw std::domain_error("mlp backward: output gradient shape mismatch");
  }
  const int last = spec.layer_count() - 1;
  Gradients<T> g{ParameterSet<T>(spec), Matrix<T>()};
  Matrix<T> delta = output_grad;
  if (spec.output_activation == OutputActivation::bounded) {
    for (Eigen::Index r = 0; r < delta.rows(); ++r) {
      const T s = static_cast<T>(spec.output_scale[static_cast<std::size_t>(r)]);
      const auto t = cache.output_pre.row(r).array().tanh();
      delta.row(r).array() *= s * (T(1) - t * t);
    }
  }
  for (int l = last; l >= 0; --l) {
    const Matrix<T>& below = l == 0 ? cache.input : cache.activations[static_cast<std::size_t>(l - 1)];
    g.params.weight(spec, l).noalias() = delta * below.transpose();
    g.params.bias(spec, l) = delta.rowwise().sum();
    Matrix<T> back = params.weight(spec, l).transpose() * delta;
    if (l == 0) {
      g.input = std::move(back);
    } else {
      // rectifier derivative: pass where the activation was positive
      delta = back.cwiseProduct((below.array() > T(0)).template cast<T>().matrix());
    }
  }
  return g;
}

template <class T>
Vector<T> forward(const MlpSpec& spec, const ParameterSet<T>& params, std::span<const T> input) {
  if (static_cast<int>(input.size()) != spec.input_dim) throw std::domain_error("mlp forward: input dimension mismatch");
  Matrix<T> x = Eigen::Map<const Matrix<T>>(input.data(), spec.input_dim, 1);
  return forward_batch(spec, params, x);
}

template <class T>
Gradients<T> backward(const MlpSpec& spec, const ParameterSet<T>& params, std::span<const T> input,
                      std::span<const T> output_grad) {
  if (static_cast<int>(input.size()) != spec.input_dim) throw std::domain_error("mlp backward: input dimension mismatch");
  if (static_cast<int>(output_grad.size()) != spec.output_dim) {
    throw std::domain_error("mlp backward: output gradient dimension mismatch");
  }
  ForwardCache<T> cache;
  Matrix<T> x = Eigen::Map<const Matrix<T>>(input.data(), spec.input_dim, 1);
  forward_batch(spec, params, x, &cache);
  Matrix<T> dy = Eigen::Map<const Matrix<T>>(output_grad.data(), spec.output_dim, 1);
  return backward_batch(spec, params, cache, dy);
}

// --- adaptive-moment optimizer ---------------------------------------------

template <class T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, T(0)), v(n, T(0)) {}
};

// Descends along `gradient`.
template <class T>
void optimize_step(ParameterSet<T>& params, const ParameterSet<T>& gradient, AdamState<T>& state,
                   double learning_rate) {
  const std::size_t n = params.values.size();
  if (gradient.values.size() != n || state.m.size() != n || state.v.size() != n) {
    throw std::domain_error("optimize_step: shape mismatch");
  }
  if (!gradient.finite()) throw std::domain_error("optimize_step: non-finite gradient");
  state.t += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  const T step = static_cast<T>(learning_rate / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T eps = static_cast<T>(state.eps);
  for (std::size_t i = 0; i < n; ++i) {
    const T g = gradient.values[i];
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    params.values[i] -= step * state.m[i] / (std::sqrt(state.v[i] * inv_c2) + eps);
  }
}

}  // namespace curio
