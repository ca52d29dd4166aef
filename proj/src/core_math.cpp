#include "osse/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace osse {

bool DenseMatrix::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

void MlpSpec::validate() const {
  if (layer_dims.size() < 2) throw std::invalid_argument("MlpSpec: need at least one layer");
  if (activations.size() != layer_dims.size() - 1)
    throw std::invalid_argument("MlpSpec: one activation per layer required");
  for (std::size_t d : layer_dims)
    if (d == 0) throw std::invalid_argument("MlpSpec: zero-width layer");
}

MlpSpec MlpSpec::standard(std::vector<std::size_t> dims) {
  MlpSpec spec;
  spec.layer_dims = std::move(dims);
  spec.activations.assign(spec.layer_dims.size() - 1, Activation::relu);
  if (!spec.activations.empty()) spec.activations.back() = Activation::identity;
  spec.validate();
  return spec;
}

Mlp Mlp::init(MlpSpec spec, Rng& rng) {
  spec.validate();
  Mlp mlp;
  mlp.spec = spec;
  for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
    const std::size_t in = spec.layer_dims[l];
    const std::size_t out = spec.layer_dims[l + 1];
    DenseMatrix w(out, in);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (auto& v : w.data) v = rng.uniform(-bound, bound);
    mlp.weights.push_back(std::move(w));
    mlp.biases.emplace_back(out, 0.0);
  }
  return mlp;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].data.size() + biases[l].size();
  return n;
}

MlpGrads MlpGrads::zeros_like(const Mlp& mlp) {
  MlpGrads g;
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    g.weight_grads.emplace_back(mlp.weights[l].rows, mlp.weights[l].cols);
    g.bias_grads.emplace_back(mlp.biases[l].size(), 0.0);
  }
  return g;
}

void MlpGrads::clear() {
  for (auto& w : weight_grads) w.fill(0.0);
  for (auto& b : bias_grads) std::fill(b.begin(), b.end(), 0.0);
}

namespace {

// y = x * W^T + b over a batch; W is (out x in) so both dot operands are
// contiguous.
void affine_forward(const DenseMatrix& x, const DenseMatrix& w, const Vec& b, DenseMatrix& y) {
  const std::size_t batch = x.rows, in = x.cols, out = w.rows;
  for (std::size_t r = 0; r < batch; ++r) {
    const double* xr = x.data.data() + r * in;
    double* yr = y.data.data() + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w.data.data() + o * in;
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wo[i];
      yr[o] = acc;
    }
  }
}

void apply_activation(Activation act, const DenseMatrix& pre, DenseMatrix& post) {
  if (act == Activation::identity) {
    post = pre;
    return;
  }
  post.rows = pre.rows;
  post.cols = pre.cols;
  post.data.resize(pre.data.size());
  for (std::size_t i = 0; i < pre.data.size(); ++i) post.data[i] = pre.data[i] > 0.0 ? pre.data[i] : 0.0;
}

}  // namespace

DenseMatrix mlp_forward(const DenseMatrix& x, const Mlp& mlp, MlpTape* tape) {
  if (x.cols != mlp.spec.input_dim())
    throw std::invalid_argument("mlp_forward: input dim mismatch");
  if (tape) {
    tape->inputs.clear();
    tape->pre_acts.clear();
  }
  DenseMatrix cur = x;
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    DenseMatrix pre(cur.rows, mlp.weights[l].rows);
    affine_forward(cur, mlp.weights[l], mlp.biases[l], pre);
    DenseMatrix post;
    apply_activation(mlp.spec.activations[l], pre, post);
    if (tape) {
      tape->inputs.push_back(std::move(cur));
      tape->pre_acts.push_back(std::move(pre));
    }
    cur = std::move(post);
  }
  if (tape) tape->output = cur;
  return cur;
}

Vec mlp_forward(std::span<const double> x, const Mlp& mlp, MlpTape* tape) {
  DenseMatrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.data.begin());
  DenseMatrix y = mlp_forward(m, mlp, tape);
  return y.data;
}

DenseMatrix mlp_backward(const Mlp& mlp, const MlpTape& tape, const DenseMatrix& upstream,
                         MlpGrads& grads) {
  if (tape.inputs.size() != mlp.weights.size())
    throw std::invalid_argument("mlp_backward: tape does not match network");
  if (upstream.rows != tape.output.rows || upstream.cols != tape.output.cols)
    throw std::invalid_argument("mlp_backward: upstream shape mismatch");

  DenseMatrix delta = upstream;
  for (std::size_t li = mlp.weights.size(); li-- > 0;) {
    const DenseMatrix& w = mlp.weights[li];
    const DenseMatrix& input = tape.inputs[li];
    const DenseMatrix& pre = tape.pre_acts[li];
    const std::size_t batch = delta.rows, out = w.rows, in = w.cols;

    if (mlp.spec.activations[li] == Activation::relu) {
      for (std::size_t i = 0; i < delta.data.size(); ++i)
        if (pre.data[i] <= 0.0) delta.data[i] = 0.0;
    }

    DenseMatrix& dw = grads.weight_grads[li];
    Vec& db = grads.bias_grads[li];
    DenseMatrix dx(batch, in);
    for (std::size_t r = 0; r < batch; ++r) {
      const double* dr = delta.data.data() + r * out;
      const double* xr = input.data.data() + r * in;
      double* dxr = dx.data.data() + r * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double d = dr[o];
        if (d == 0.0) continue;
        db[o] += d;
        double* dwo = dw.data.data() + o * in;
        const double* wo = w.data.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) {
          dwo[i] += d * xr[i];
          dxr[i] += d * wo[i];
        }
      }
    }
    delta = std::move(dx);
  }
  return delta;
}

double EmbeddingVector::dot(const EmbeddingVector& other) const {
  if (values.size() != other.values.size())
    throw std::invalid_argument("EmbeddingVector::dot: dim mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) acc += values[i] * other.values[i];
  return acc;
}

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

EmbeddingVector l2_normalize(std::span<const double> v) {
  const double n = l2_norm(v);
  if (n == 0.0) throw std::domain_error("degenerate embedding");
  if (!std::isfinite(n)) throw std::domain_error("l2_normalize: non-finite input");
  EmbeddingVector e;
  e.values.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) e.values[i] = v[i] / n;
  return e;
}

Vec l2_normalize_backward(const EmbeddingVector& normalized, double prenorm_length,
                          std::span<const double> upstream) {
  // d(v/|v|)/dv applied to g: (g - e (e.g)) / |v|
  double proj = 0.0;
  for (std::size_t i = 0; i < upstream.size(); ++i) proj += normalized.values[i] * upstream[i];
  Vec grad(upstream.size());
  for (std::size_t i = 0; i < upstream.size(); ++i)
    grad[i] = (upstream[i] - normalized.values[i] * proj) / prenorm_length;
  return grad;
}

AdamState AdamState::init(std::size_t parameter_count, AdamConfig config) {
  AdamState s;
  s.first_moment.assign(parameter_count, 0.0);
  s.second_moment.assign(parameter_count, 0.0);
  s.config = config;
  return s;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw std::invalid_argument("adam_step: size mismatch");
  for (double g : grads)
    if (!std::isfinite(g)) throw std::domain_error("adam_step: non-finite gradient");

  const AdamConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.first_moment[i] = c.beta1 * state.first_moment[i] + (1.0 - c.beta1) * g;
    state.second_moment[i] = c.beta2 * state.second_moment[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.first_moment[i] / bc1;
    const double v_hat = state.second_moment[i] / bc2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

double finite_diff_check(const std::function<double()>& fn, std::span<double> params,
                         std::span<const double> analytic_grads, double h) {
  if (params.size() != analytic_grads.size())
    throw std::invalid_argument("finite_diff_check: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double f_plus = fn();
    params[i] = saved - h;
    const double f_minus = fn();
    params[i] = saved;
    const double fd = (f_plus - f_minus) / (2.0 * h);
    const double a = analytic_grads[i];
    const double err = std::abs(fd - a) / std::max(1e-8, std::abs(fd) + std::abs(a));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace osse
