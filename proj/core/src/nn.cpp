#include "hetnet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "hetnet/error.hpp"

namespace hetnet::nn {
namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void apply_activation(const Activation& act, const Matrix& pre, Matrix& post) {
  switch (act.kind) {
    case Activation::Kind::Linear:
      post = pre;
      break;
    case Activation::Kind::Relu:
      post = pre.cwiseMax(0.0);
      break;
    case Activation::Kind::Sigmoid:
      post = pre.unaryExpr([](double x) { return sigmoid(x); });
      break;
    case Activation::Kind::Scale:
      post = act.factor * pre;
      break;
  }
}

std::string activation_name(const Activation& act) {
  switch (act.kind) {
    case Activation::Kind::Linear: return "linear";
    case Activation::Kind::Relu: return "relu";
    case Activation::Kind::Sigmoid: return "sigmoid";
    case Activation::Kind::Scale: return "scale";
  }
  return "?";
}

}  // namespace

bool Layer::operator==(const Layer& other) const {
  return activation == other.activation && in == other.in && out == other.out &&
         weight.rows() == other.weight.rows() && weight.cols() == other.weight.cols() &&
         weight == other.weight && bias.size() == other.bias.size() && bias == other.bias;
}

bool Gradients::all_finite() const {
  for (const auto& w : weight)
    if (!w.allFinite()) return false;
  for (const auto& b : bias)
    if (!b.allFinite()) return false;
  return true;
}

void Gradients::scale(double factor) {
  for (auto& w : weight) w *= factor;
  for (auto& b : bias) b *= factor;
}

void Gradients::add(const Gradients& other) {
  require(other.weight.size() == weight.size(), ErrorKind::Shape, "gradient depth mismatch");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    require(l.in >= 1 && l.out >= 1, ErrorKind::Config, "layer sizes must be >= 1");
    if (i > 0)
      require(layers_[i - 1].out == l.in, ErrorKind::Shape,
              "layer " + std::to_string(i) + " input does not chain with previous output");
    if (l.trainable()) {
      require(l.weight.rows() == l.out && l.weight.cols() == l.in && l.bias.size() == l.out,
              ErrorKind::Shape, "parameter shape mismatch in layer " + std::to_string(i));
    } else {
      require(l.in == l.out, ErrorKind::Config, "scale layer must preserve width");
    }
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Matrix Mlp::forward(const Matrix& input, ForwardCache& cache) const {
  require(input.rows() == input_size(), ErrorKind::Shape,
          "forward: input has " + std::to_string(input.rows()) + " rows, expected " +
              std::to_string(input_size()));
  require(input.allFinite(), ErrorKind::Numeric, "forward: non-finite input");
  cache.input = input;
  cache.pre.resize(layers_.size());
  cache.post.resize(layers_.size());
  const Matrix* x = &cache.input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.trainable()) {
      cache.pre[i].noalias() = l.weight * *x;
      cache.pre[i].colwise() += l.bias;
    } else {
      cache.pre[i] = *x;
    }
    apply_activation(l.activation, cache.pre[i], cache.post[i]);
    x = &cache.post[i];
  }
  return cache.post.back();
}

Matrix Mlp::predict(const Matrix& input) const {
  require(input.rows() == input_size(), ErrorKind::Shape, "predict: input dimension mismatch");
  require(input.allFinite(), ErrorKind::Numeric, "predict: non-finite input");
  Matrix x = input;
  Matrix pre;
  for (const Layer& l : layers_) {
    if (l.trainable()) {
      pre.noalias() = l.weight * x;
      pre.colwise() += l.bias;
    } else {
      pre = x;
    }
    apply_activation(l.activation, pre, x);
  }
  return x;
}

Vector Mlp::predict(const Vector& input) const {
  Matrix out = predict(Matrix(input));
  return out.col(0);
}

bool Mlp::same_topology(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& a = layers_[i];
    const Layer& b = other.layers_[i];
    if (a.in != b.in || a.out != b.out || a.activation.kind != b.activation.kind) return false;
  }
  return true;
}

Gradients Mlp::zero_gradients() const {
  Gradients g;
  g.weight.reserve(layers_.size());
  g.bias.reserve(layers_.size());
  for (const Layer& l : layers_) {
    g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

Mlp mlp_init(std::span<const int> sizes, std::span<const Activation> activations, Rng& rng) {
  require(sizes.size() == activations.size() + 1, ErrorKind::Config,
          "mlp_init: need exactly one more size than activations");
  require(!activations.empty(), ErrorKind::Config, "mlp_init: at least one layer required");
  std::vector<Layer> layers;
  layers.reserve(activations.size());
  for (std::size_t i = 0; i < activations.size(); ++i) {
    require(sizes[i] >= 1 && sizes[i + 1] >= 1, ErrorKind::Config, "mlp_init: sizes must be >= 1");
    Layer l;
    l.activation = activations[i];
    l.in = sizes[i];
    l.out = sizes[i + 1];
    if (l.trainable()) {
      const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      l.weight.resize(l.out, l.in);
      // Row-major fill order keeps draws independent of Eigen storage order.
      for (int r = 0; r < l.out; ++r)
        for (int c = 0; c < l.in; ++c) l.weight(r, c) = dist(rng);
      l.bias = Vector::Zero(l.out);
    } else {
      require(l.in == l.out, ErrorKind::Config, "mlp_init: scale layer must preserve width");
    }
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

BackwardResult mlp_backward(const Mlp& net, const ForwardCache& cache,
                            const Matrix& output_gradient, bool want_params) {
  const auto& layers = net.layers();
  require(cache.depth() == layers.size(), ErrorKind::Shape, "backward: cache depth mismatch");
  require(output_gradient.rows() == net.output_size() &&
              output_gradient.cols() == cache.post.back().cols(),
          ErrorKind::Shape, "backward: output gradient shape mismatch");
  require(cache.input.rows() == net.input_size(), ErrorKind::Shape, "backward: stale cache");

  BackwardResult result;
  if (want_params) {
    result.params.weight.resize(layers.size());
    result.params.bias.resize(layers.size());
  }

  Matrix delta = output_gradient;  // gradient w.r.t. post-activation
  for (std::size_t idx = layers.size(); idx-- > 0;) {
    const Layer& l = layers[idx];
    const Matrix& pre = cache.pre[idx];
    const Matrix& post = cache.post[idx];
    require(pre.rows() == l.out, ErrorKind::Shape, "backward: stale cache");
    switch (l.activation.kind) {
      case Activation::Kind::Linear:
        break;
      case Activation::Kind::Relu:
        delta = delta.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
        break;
      case Activation::Kind::Sigmoid:
        delta = delta.cwiseProduct(post.cwiseProduct((1.0 - post.array()).matrix()));
        break;
      case Activation::Kind::Scale:
        delta *= l.activation.factor;
        break;
    }
    const Matrix& layer_input = idx == 0 ? cache.input : cache.post[idx - 1];
    if (l.trainable()) {
      if (want_params) {
        result.params.weight[idx].noalias() = delta * layer_input.transpose();
        result.params.bias[idx] = delta.rowwise().sum();
      }
      Matrix next(l.in, delta.cols());
      next.noalias() = l.weight.transpose() * delta;
      delta = std::move(next);
    } else if (want_params) {
      result.params.weight[idx] = Matrix(0, 0);
      result.params.bias[idx] = Vector(0);
    }
  }
  result.input_gradient = std::move(delta);
  return result;
}

AdamState AdamState::for_net(const Mlp& net, double learning_rate) {
  require(learning_rate > 0.0, ErrorKind::Config, "Adam learning rate must be > 0");
  AdamState s;
  s.first_moment = net.zero_gradients();
  s.second_moment = net.zero_gradients();
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(Mlp& net, const Gradients& gradients, AdamState& state) {
  auto& layers = net.layers();
  require(gradients.weight.size() == layers.size() && gradients.bias.size() == layers.size() &&
              state.first_moment.weight.size() == layers.size(),
          ErrorKind::Shape, "adam_step: gradient/state depth mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    require(gradients.weight[i].rows() == layers[i].weight.rows() &&
                gradients.weight[i].cols() == layers[i].weight.cols() &&
                gradients.bias[i].size() == layers[i].bias.size(),
            ErrorKind::Shape, "adam_step: gradient shape mismatch");
  }
  require(gradients.all_finite(), ErrorKind::Numeric, "adam_step: non-finite gradient");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double lr = state.learning_rate;
  const double eps = state.epsilon_stab;

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].trainable()) continue;
    update(layers[i].weight, gradients.weight[i], state.first_moment.weight[i],
           state.second_moment.weight[i]);
    update(layers[i].bias, gradients.bias[i], state.first_moment.bias[i],
           state.second_moment.bias[i]);
  }
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  require(target.same_topology(online), ErrorKind::Shape, "soft_update: topology mismatch");
  require(tau >= 0.0 && tau <= 1.0, ErrorKind::Domain, "soft_update: tau outside [0,1]");
  auto& t_layers = target.layers();
  const auto& o_layers = online.layers();
  for (std::size_t i = 0; i < t_layers.size(); ++i) {
    if (!t_layers[i].trainable()) continue;
    if (tau == 1.0) {
      t_layers[i].weight = o_layers[i].weight;
      t_layers[i].bias = o_layers[i].bias;
    } else {
      t_layers[i].weight = tau * o_layers[i].weight + (1.0 - tau) * t_layers[i].weight;
      t_layers[i].bias = tau * o_layers[i].bias + (1.0 - tau) * t_layers[i].bias;
    }
  }
}

double gradient_check(const Mlp& net, const Vector& input, double epsilon) {
  require(epsilon >= 1e-8 && epsilon <= 1e-3, ErrorKind::Domain,
          "gradient_check: epsilon outside [1e-8, 1e-3]");
  ForwardCache cache;
  const Matrix x(input);
  net.forward(x, cache);
  const Matrix ones = Matrix::Ones(net.output_size(), 1);
  const BackwardResult analytic = mlp_backward(net, cache, ones);

  Mlp probe = net;
  auto objective = [&]() { return probe.predict(x).sum(); };
  auto rel_error = [](double a, double n) {
    return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
  };

  double worst = 0.0;
  auto& layers = probe.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].trainable()) continue;
    for (int r = 0; r < layers[i].weight.rows(); ++r) {
      for (int c = 0; c < layers[i].weight.cols(); ++c) {
        double& w = layers[i].weight(r, c);
        const double saved = w;
        w = saved + epsilon;
        const double up = objective();
        w = saved - epsilon;
        const double down = objective();
        w = saved;
        worst = std::max(worst, rel_error(analytic.params.weight[i](r, c), (up - down) / (2 * epsilon)));
      }
      double& b = layers[i].bias(r);
      const double saved = b;
      b = saved + epsilon;
      const double up = objective();
      b = saved - epsilon;
      const double down = objective();
      b = saved;
      worst = std::max(worst, rel_error(analytic.params.bias[i](r), (up - down) / (2 * epsilon)));
    }
  }
  return worst;
}

void save_mlp(std::ostream& out, const Mlp& net) {
  const auto precision = out.precision(17);
  out << "mlp " << net.depth() << '\n';
  for (const Layer& l : net.layers()) {
    out << "layer " << l.in << ' ' << l.out << ' ' << activation_name(l.activation);
    if (l.activation.kind == Activation::Kind::Scale) out << ' ' << l.activation.factor;
    out << '\n';
    if (!l.trainable()) continue;
    for (int r = 0; r < l.out; ++r) {
      for (int c = 0; c < l.in; ++c) out << (c ? " " : "") << l.weight(r, c);
      out << '\n';
    }
    for (int r = 0; r < l.out; ++r) out << (r ? " " : "") << l.bias(r);
    out << '\n';
  }
  out.precision(precision);
  require(static_cast<bool>(out), ErrorKind::Io, "save_mlp: write failed");
}

Mlp load_mlp(std::istream& in) {
  std::string tag;
  std::size_t depth = 0;
  in >> tag >> depth;
  require(in && tag == "mlp", ErrorKind::Io, "load_mlp: missing header");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i < depth; ++i) {
    Layer l;
    std::string name;
    in >> tag >> l.in >> l.out >> name;
    require(in && tag == "layer", ErrorKind::Io, "load_mlp: malformed layer header");
    if (name == "linear") {
      l.activation = Activation::linear();
    } else if (name == "relu") {
      l.activation = Activation::relu();
    } else if (name == "sigmoid") {
      l.activation = Activation::sigmoid();
    } else if (name == "scale") {
      double c = 0;
      in >> c;
      l.activation = Activation::scale(c);
    } else {
      raise(ErrorKind::Io, "load_mlp: unknown activation '" + name + "'");
    }
    if (l.trainable()) {
      l.weight.resize(l.out, l.in);
      l.bias.resize(l.out);
      for (int r = 0; r < l.out; ++r)
        for (int c = 0; c < l.in; ++c) in >> l.weight(r, c);
      for (int r = 0; r < l.out; ++r) in >> l.bias(r);
    }
    require(static_cast<bool>(in), ErrorKind::Io, "load_mlp: truncated parameters");
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

}  // namespace hetnet::nn
