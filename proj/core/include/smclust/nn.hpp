#pragma once

#include "smclust/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace smclust {

enum class Activation { relu, tanh_fn, identity };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Per-tensor parameter gradients of one network plus the gradient with
/// respect to the network input.
struct Gradients {
  std::vector<Matrix> dW;
  std::vector<Matrix> db;
  Matrix dinput;

  Gradients& operator+=(const Gradients& other);
  void scale(double s);
};

/// Fully connected multilayer perceptron operating on row-major batches:
/// layer l maps activations a to act(a * W[l] + b[l]) with W[l] shaped
/// layer_dims[l] x layer_dims[l+1]. All arithmetic is float64.
///
/// forward() caches inputs and pre-activations; backward() consumes that
/// cache and refuses to run when it is missing or was taken before the last
/// parameter update.
class MlpNetwork {
 public:
  MlpNetwork() = default;

  /// Builds a network with Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out)))
  /// and zero biases, seeded deterministically.
  MlpNetwork(std::string name, std::vector<int> layer_dims,
             std::vector<Activation> activations, std::uint64_t seed);

  const std::string& name() const { return name_; }
  const std::vector<int>& layer_dims() const { return layer_dims_; }
  const std::vector<Activation>& activations() const { return activations_; }
  int input_dim() const { return layer_dims_.front(); }
  int output_dim() const { return layer_dims_.back(); }
  std::size_t layer_count() const { return weights_.size(); }

  std::vector<Matrix>& weights() { return weights_; }
  std::vector<Matrix>& biases() { return biases_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Matrix>& biases() const { return biases_; }

  /// Flat parameter access in a fixed order (W0, b0, W1, b1, ...).
  std::vector<Matrix*> parameters();
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;

  /// Batch forward pass; rows are samples. Throws data_error when the input
  /// width differs from layer_dims.front(). Const because parameters stay
  /// untouched; only the backward cache is refreshed.
  Matrix forward(const Matrix& x) const;

  /// Backpropagates dL/d(output) through the cached forward pass, returning
  /// parameter gradients and dL/d(input).
  Gradients backward(const Matrix& grad_output) const;

  /// Called by the optimizer after updating parameters; invalidates caches.
  void note_parameter_update() { ++params_version_; }
  std::uint64_t params_version() const { return params_version_; }

 private:
  std::string name_;
  std::vector<int> layer_dims_;
  std::vector<Activation> activations_;
  std::vector<Matrix> weights_;
  std::vector<Matrix> biases_;
  std::uint64_t params_version_ = 0;

  struct Cache {
    Matrix input;
    std::vector<Matrix> pre;
    std::vector<Matrix> post;
    std::uint64_t version = 0;
    bool valid = false;
  };
  mutable Cache cache_;
};

/// Adam moment buffers for one network. Step count is shared across tensors.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// One Adam update over all parameters of `net` using gradients `g`.
/// Moments are allocated lazily on the first call. Throws numeric_error
/// naming the offending tensor when a gradient is non-finite.
void adam_step(AdamState& state, MlpNetwork& net, const Gradients& g, double lr);

/// Rows scaled to unit Euclidean norm; rows with norm below 1e-12 become zero.
Matrix l2_normalize_rows(const Matrix& h);

/// Cache for backpropagation through row normalization.
struct RowNormCache {
  Matrix y;
  Vector norms;
};
RowNormCache l2_normalize_rows_cached(const Matrix& h);

/// Given dL/dy for y = l2_normalize_rows(x), returns dL/dx. Degenerate rows
/// get zero gradient.
Matrix l2_normalize_rows_backward(const RowNormCache& cache, const Matrix& grad_y);

/// Gradient check report for one network; rel_err = |a - f| / max(|a|, |f|, 1e-8)
/// per coordinate, aggregated as a maximum per tensor.
struct GradCheckReport {
  struct TensorStat {
    std::string name;
    double max_rel_err = 0.0;
    std::size_t coords_checked = 0;
  };
  std::vector<TensorStat> tensors;
  double max_rel_err = 0.0;
  bool pass = false;
};

/// Compares analytic parameter gradients against central finite differences.
/// `loss_fn` must be deterministic in the network parameters; `grad_fn`
/// returns the analytic gradients at the current parameters. Networks with
/// more than `max_coords` parameters are checked on a seeded random subset
/// of coordinates.
GradCheckReport grad_check(const std::function<double(MlpNetwork&)>& loss_fn,
                           const std::function<Gradients(MlpNetwork&)>& grad_fn,
                           MlpNetwork& net, double tol, std::uint64_t seed = 0,
                           std::size_t max_coords = 10000, double h = 1e-5);

}  // namespace smclust
