#include "smclust/nn.hpp"

#include "smclust/rng.hpp"

#include <cmath>
#include <random>

namespace smclust {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh_fn: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh_fn;
  if (name == "identity") return Activation::identity;
  throw config_error("unknown activation: " + name);
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (dW.empty()) {
    *this = other;
    return *this;
  }
  if (other.dW.size() != dW.size()) throw data_error("Gradients: layer count mismatch");
  for (std::size_t l = 0; l < dW.size(); ++l) {
    dW[l] += other.dW[l];
    db[l] += other.db[l];
  }
  if (dinput.size() > 0 && other.dinput.size() > 0) dinput += other.dinput;
  return *this;
}

void Gradients::scale(double s) {
  for (auto& g : dW) g *= s;
  for (auto& g : db) g *= s;
  if (dinput.size() > 0) dinput *= s;
}

namespace {

Matrix apply_activation(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::tanh_fn: return z.array().tanh().matrix();
    case Activation::identity: return z;
  }
  return z;
}

Matrix activation_grad(Activation a, const Matrix& pre, const Matrix& post, const Matrix& g) {
  switch (a) {
    case Activation::relu:
      return (pre.array() > 0.0).select(g, Matrix::Zero(g.rows(), g.cols()));
    case Activation::tanh_fn:
      return (g.array() * (1.0 - post.array().square())).matrix();
    case Activation::identity:
      return g;
  }
  return g;
}

}  // namespace

MlpNetwork::MlpNetwork(std::string name, std::vector<int> layer_dims,
                       std::vector<Activation> activations, std::uint64_t seed)
    : name_(std::move(name)), layer_dims_(std::move(layer_dims)), activations_(std::move(activations)) {
  if (layer_dims_.size() < 2) throw config_error(name_ + ": network needs at least 2 layer dims");
  if (activations_.size() != layer_dims_.size() - 1)
    throw config_error(name_ + ": expected one activation per layer");
  for (int d : layer_dims_)
    if (d < 1) throw config_error(name_ + ": layer dims must be positive");

  auto rng = make_rng(seed);
  const std::size_t layers = layer_dims_.size() - 1;
  weights_.reserve(layers);
  biases_.reserve(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const int fan_in = layer_dims_[l];
    const int fan_out = layer_dims_[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(Matrix::Zero(1, fan_out));
  }
}

std::vector<Matrix*> MlpNetwork::parameters() {
  std::vector<Matrix*> out;
  out.reserve(2 * weights_.size());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<std::string> MlpNetwork::parameter_names() const {
  std::vector<std::string> out;
  out.reserve(2 * weights_.size());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(name_ + ".W" + std::to_string(l));
    out.push_back(name_ + ".b" + std::to_string(l));
  }
  return out;
}

std::size_t MlpNetwork::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  return n;
}

Matrix MlpNetwork::forward(const Matrix& x) const {
  if (x.cols() != layer_dims_.front())
    throw data_error(name_ + ": input width " + std::to_string(x.cols()) + " does not match layer dim " +
                     std::to_string(layer_dims_.front()));
  cache_.input = x;
  cache_.pre.assign(weights_.size(), Matrix());
  cache_.post.assign(weights_.size(), Matrix());
  Matrix a = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = a * weights_[l];
    z.rowwise() += biases_[l].row(0);
    cache_.pre[l] = z;
    a = apply_activation(activations_[l], z);
    cache_.post[l] = a;
  }
  cache_.version = params_version_;
  cache_.valid = true;
  return a;
}

Gradients MlpNetwork::backward(const Matrix& grad_output) const {
  if (!cache_.valid) throw std::logic_error(name_ + ": backward called without a forward pass");
  if (cache_.version != params_version_)
    throw std::logic_error(name_ + ": forward cache is stale after a parameter update");
  if (grad_output.rows() != cache_.post.back().rows() || grad_output.cols() != cache_.post.back().cols())
    throw data_error(name_ + ": output gradient shape mismatch");

  const std::size_t layers = weights_.size();
  Gradients g;
  g.dW.resize(layers);
  g.db.resize(layers);
  Matrix delta = activation_grad(activations_[layers - 1], cache_.pre[layers - 1],
                                 cache_.post[layers - 1], grad_output);
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& a_prev = (l == 0) ? cache_.input : cache_.post[l - 1];
    g.dW[l] = a_prev.transpose() * delta;
    g.db[l] = delta.colwise().sum();
    Matrix grad_prev = delta * weights_[l].transpose();
    if (l == 0) {
      g.dinput = std::move(grad_prev);
    } else {
      delta = activation_grad(activations_[l - 1], cache_.pre[l - 1], cache_.post[l - 1], grad_prev);
    }
  }
  return g;
}

void adam_step(AdamState& state, MlpNetwork& net, const Gradients& g, double lr) {
  if (g.dW.size() != net.layer_count()) throw data_error(net.name() + ": gradient layer count mismatch");
  const auto names = net.parameter_names();
  auto params = net.parameters();
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i] = Matrix::Zero(params[i]->rows(), params[i]->cols());
      state.v[i] = Matrix::Zero(params[i]->rows(), params[i]->cols());
    }
  }
  if (state.m.size() != params.size()) throw data_error(net.name() + ": optimizer state size mismatch");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Matrix* grads[2] = {&g.dW[l], &g.db[l]};
    for (int k = 0; k < 2; ++k) {
      const std::size_t idx = 2 * l + k;
      const Matrix& grad = *grads[k];
      if (!grad.allFinite()) throw numeric_error("non-finite gradient for parameter " + names[idx]);
      if (grad.rows() != params[idx]->rows() || grad.cols() != params[idx]->cols())
        throw data_error(net.name() + ": gradient shape mismatch for " + names[idx]);
      Matrix& m = state.m[idx];
      Matrix& v = state.v[idx];
      m = state.beta1 * m + (1.0 - state.beta1) * grad;
      v = state.beta2 * v + (1.0 - state.beta2) * grad.array().square().matrix();
      const Matrix mhat = m / bc1;
      const Matrix vhat = v / bc2;
      params[idx]->array() -= lr * mhat.array() / (vhat.array().sqrt() + state.eps);
    }
  }
  net.note_parameter_update();
}

Matrix l2_normalize_rows(const Matrix& h) {
  return l2_normalize_rows_cached(h).y;
}

RowNormCache l2_normalize_rows_cached(const Matrix& h) {
  RowNormCache c;
  c.norms = h.rowwise().norm();
  c.y = Matrix::Zero(h.rows(), h.cols());
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    if (c.norms(i) >= 1e-12) c.y.row(i) = h.row(i) / c.norms(i);
  return c;
}

Matrix l2_normalize_rows_backward(const RowNormCache& cache, const Matrix& grad_y) {
  if (grad_y.rows() != cache.y.rows() || grad_y.cols() != cache.y.cols())
    throw data_error("l2_normalize_rows_backward: gradient shape mismatch");
  Matrix grad_x = Matrix::Zero(grad_y.rows(), grad_y.cols());
  for (Eigen::Index i = 0; i < grad_y.rows(); ++i) {
    if (cache.norms(i) < 1e-12) continue;
    const auto y = cache.y.row(i);
    const auto g = grad_y.row(i);
    grad_x.row(i) = (g - g.dot(y) * y) / cache.norms(i);
  }
  return grad_x;
}

GradCheckReport grad_check(const std::function<double(MlpNetwork&)>& loss_fn,
                           const std::function<Gradients(MlpNetwork&)>& grad_fn,
                           MlpNetwork& net, double tol, std::uint64_t seed,
                           std::size_t max_coords, double h) {
  GradCheckReport report;
  const Gradients analytic = grad_fn(net);
  auto params = net.parameters();
  const auto names = net.parameter_names();

  std::vector<const Matrix*> analytic_tensors;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    analytic_tensors.push_back(&analytic.dW[l]);
    analytic_tensors.push_back(&analytic.db[l]);
  }

  const std::size_t total = net.parameter_count();
  const bool subsample = total > max_coords;
  auto rng = make_rng(seed, 0x67c0);
  std::bernoulli_distribution keep(subsample ? static_cast<double>(max_coords) / static_cast<double>(total)
                                             : 1.0);

  for (std::size_t idx = 0; idx < params.size(); ++idx) {
    Matrix& p = *params[idx];
    const Matrix& a = *analytic_tensors[idx];
    GradCheckReport::TensorStat stat;
    stat.name = names[idx];
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        if (subsample && !keep(rng)) continue;
        const double orig = p(i, j);
        p(i, j) = orig + h;
        const double up = loss_fn(net);
        p(i, j) = orig - h;
        const double down = loss_fn(net);
        p(i, j) = orig;
        const double fd = (up - down) / (2.0 * h);
        const double an = a(i, j);
        const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
        stat.max_rel_err = std::max(stat.max_rel_err, rel);
        ++stat.coords_checked;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, stat.max_rel_err);
    report.tensors.push_back(std::move(stat));
  }
  loss_fn(net);
  report.pass = report.max_rel_err <= tol;
  return report;
}

}  // namespace smclust
