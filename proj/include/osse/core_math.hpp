#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "osse/rng.hpp"

namespace osse {

using Vec = std::vector<double>;

// Row-major dense matrix. Training math is 64-bit throughout; artifacts on
// disk store 32-bit floats.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  bool all_finite() const;
};

enum class Activation { relu, identity };

// Layer shape description: layer_dims = {input, hidden..., output};
// activations has one entry per affine layer.
struct MlpSpec {
  std::vector<std::size_t> layer_dims;
  std::vector<Activation> activations;

  std::size_t num_layers() const { return activations.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  void validate() const;

  // ReLU on every layer except the last (identity; L2 norm follows outside).
  static MlpSpec standard(std::vector<std::size_t> dims);
};

// Weight matrices are (out x in): row o holds the weights of output unit o.
struct Mlp {
  MlpSpec spec;
  std::vector<DenseMatrix> weights;
  std::vector<Vec> biases;

  static Mlp init(MlpSpec spec, Rng& rng);
  std::size_t parameter_count() const;
};

// Activation record of one batched forward pass; inputs[l] is the input to
// layer l, pre_acts[l] its affine output before the nonlinearity.
struct MlpTape {
  std::vector<DenseMatrix> inputs;
  std::vector<DenseMatrix> pre_acts;
  DenseMatrix output;
};

struct MlpGrads {
  std::vector<DenseMatrix> weight_grads;
  std::vector<Vec> bias_grads;

  static MlpGrads zeros_like(const Mlp& mlp);
  void clear();
};

// Batched forward: x is (batch x input_dim), returns (batch x output_dim).
DenseMatrix mlp_forward(const DenseMatrix& x, const Mlp& mlp, MlpTape* tape = nullptr);

// Single-vector convenience wrapper.
Vec mlp_forward(std::span<const double> x, const Mlp& mlp, MlpTape* tape = nullptr);

// Accumulates parameter gradients into `grads` and returns the gradient
// w.r.t. the batch input.
DenseMatrix mlp_backward(const Mlp& mlp, const MlpTape& tape, const DenseMatrix& upstream,
                         MlpGrads& grads);

// Unit-norm vector in the shared embedding space. The common output currency
// of every tower.
struct EmbeddingVector {
  Vec values;

  std::size_t dim() const { return values.size(); }
  double dot(const EmbeddingVector& other) const;
};

// Throws std::domain_error("degenerate embedding") on the zero vector.
EmbeddingVector l2_normalize(std::span<const double> v);

double l2_norm(std::span<const double> v);

// Gradient of v/|v| given the normalized output, the pre-norm length and the
// upstream gradient.
Vec l2_normalize_backward(const EmbeddingVector& normalized, double prenorm_length,
                          std::span<const double> upstream);

// A named view over one trainable tensor; the trainer walks these in a fixed
// registration order.
struct ParamView {
  std::string name;
  std::span<double> values;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  Vec first_moment;
  Vec second_moment;
  AdamConfig config;

  static AdamState init(std::size_t parameter_count, AdamConfig config);
};

// One bias-corrected Adam update over a flat parameter/gradient pair.
// Throws std::domain_error on non-finite gradients.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

// Central-difference gradient check, h = 1e-5. Returns
// max over parameters of |fd - analytic| / max(1e-8, |fd| + |analytic|).
double finite_diff_check(const std::function<double()>& fn, std::span<double> params,
                         std::span<const double> analytic_grads, double h = 1e-5);

}  // namespace osse
