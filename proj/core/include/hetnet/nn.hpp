#pragma once

// Dense feed-forward networks with explicit reverse-mode gradients.
//
// Batches are column-major: an input matrix of shape (in x batch) holds one
// sample per column. Gradients returned by backward() are sums over the batch;
// callers apply their own loss normalization.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hetnet/rng.hpp"

namespace hetnet::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Activation {
  enum class Kind { Linear, Relu, Sigmoid, Scale };

  Kind kind = Kind::Linear;
  double factor = 1.0;  // only meaningful for Scale

  static Activation linear() { return {Kind::Linear, 1.0}; }
  static Activation relu() { return {Kind::Relu, 1.0}; }
  static Activation sigmoid() { return {Kind::Sigmoid, 1.0}; }
  // Fixed elementwise multiplication by c; carries no trainable parameters.
  static Activation scale(double c) { return {Kind::Scale, c}; }

  bool operator==(const Activation&) const = default;
};

struct Layer {
  Activation activation;
  Matrix weight;  // out x in; empty for Scale layers
  Vector bias;    // out; empty for Scale layers
  int in = 0;
  int out = 0;

  bool trainable() const { return activation.kind != Activation::Kind::Scale; }
  bool operator==(const Layer&) const;
};

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;   // pre-activation per layer
  std::vector<Matrix> post;  // post-activation per layer

  std::size_t depth() const { return post.size(); }
};

// Parameter-shaped gradient (or moment) storage. Entries for Scale layers are
// zero-sized.
struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  bool all_finite() const;
  void scale(double factor);
  void add(const Gradients& other);
};

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Layer> layers);

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  std::size_t depth() const { return layers_.size(); }
  int input_size() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_size() const { return layers_.empty() ? 0 : layers_.back().out; }
  std::size_t parameter_count() const;

  // Batched forward pass; fills `cache` for a later backward().
  Matrix forward(const Matrix& input, ForwardCache& cache) const;
  // Batched forward pass without retaining intermediates.
  Matrix predict(const Matrix& input) const;
  Vector predict(const Vector& input) const;

  bool same_topology(const Mlp& other) const;
  bool operator==(const Mlp& other) const { return layers_ == other.layers_; }

  Gradients zero_gradients() const;

 private:
  std::vector<Layer> layers_;
};

// Glorot-uniform weights, zero biases. `sizes` has one more entry than
// `activations`.
Mlp mlp_init(std::span<const int> sizes, std::span<const Activation> activations, Rng& rng);

struct BackwardResult {
  Gradients params;
  Matrix input_gradient;
};

// Reverse-mode gradients of sum(output .* output_gradient) with respect to
// every parameter and the input. With `want_params` false only the input
// gradient is produced (params left empty).
BackwardResult mlp_backward(const Mlp& net, const ForwardCache& cache,
                            const Matrix& output_gradient, bool want_params = true);

struct AdamState {
  Gradients first_moment;
  Gradients second_moment;
  long step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon_stab = 1e-8;

  static AdamState for_net(const Mlp& net, double learning_rate);
};

// One bias-corrected Adam descent step. Throws Numeric (leaving net and state
// untouched) when a gradient entry is not finite.
void adam_step(Mlp& net, const Gradients& gradients, AdamState& state);

// target <- tau * online + (1 - tau) * target, parameter by parameter.
void soft_update(Mlp& target, const Mlp& online, double tau);

// Maximum over all trainable parameters of
// |analytic - central difference| / max(1, |analytic|, |numeric|), using the
// sum of outputs as the scalar objective.
double gradient_check(const Mlp& net, const Vector& input, double epsilon);

// Text checkpoint: header with layer sizes and activations, then parameters
// at 17 significant digits.
void save_mlp(std::ostream& out, const Mlp& net);
Mlp load_mlp(std::istream& in);

}  // namespace hetnet::nn
