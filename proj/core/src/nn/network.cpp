#include "musculo/nn/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace musculo::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh:
      return "tanh";
    case Activation::Identity:
      return "identity";
  }
  return "unknown";
}

int Network::in_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }

int Network::out_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<LayerSpec> Network::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back({l.in_dim(), l.out_dim(), l.activation});
  return out;
}

Network Network::zeros_like() const {
  Network z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) {
    z.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()),
                        Vector::Zero(l.bias.size()), l.activation});
  }
  return z;
}

double Network::norm() const {
  double s = 0.0;
  for (const auto& l : layers) s += l.weight.squaredNorm() + l.bias.squaredNorm();
  return std::sqrt(s);
}

bool Network::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool Network::same_shape(const Network& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& a = layers[k];
    const auto& b = other.layers[k];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.bias.size() != b.bias.size()) {
      return false;
    }
  }
  return true;
}

Network& Network::operator+=(const Network& other) {
  if (!same_shape(other)) throw std::invalid_argument("Network::operator+=: shape mismatch");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    layers[k].weight += other.layers[k].weight;
    layers[k].bias += other.layers[k].bias;
  }
  return *this;
}

Network& Network::operator*=(double s) {
  for (auto& l : layers) {
    l.weight *= s;
    l.bias *= s;
  }
  return *this;
}

bool Network::operator==(const Network& other) const {
  if (!same_shape(other)) return false;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].activation != other.layers[k].activation) return false;
    if (layers[k].weight != other.layers[k].weight) return false;
    if (layers[k].bias != other.layers[k].bias) return false;
  }
  return true;
}

void check_chain(const std::vector<LayerSpec>& specs) {
  if (specs.empty()) throw std::invalid_argument("network needs at least one layer");
  for (std::size_t k = 0; k < specs.size(); ++k) {
    if (specs[k].in_dim <= 0 || specs[k].out_dim <= 0) {
      throw std::invalid_argument("layer " + std::to_string(k) + " has a non-positive dimension");
    }
    if (k + 1 < specs.size() && specs[k].out_dim != specs[k + 1].in_dim) {
      throw std::invalid_argument("layer " + std::to_string(k) + " out_dim " +
                                  std::to_string(specs[k].out_dim) + " != layer " +
                                  std::to_string(k + 1) + " in_dim " +
                                  std::to_string(specs[k + 1].in_dim));
    }
  }
}

Network init_network(const std::vector<LayerSpec>& specs, std::uint64_t seed) {
  check_chain(specs);
  std::mt19937_64 rng(seed);
  Network net;
  net.layers.reserve(specs.size());
  for (const auto& s : specs) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in_dim));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Layer layer{Matrix(s.out_dim, s.in_dim), Vector::Zero(s.out_dim), s.activation};
    // row-major fill so the draw order matches the serialized layout
    for (int r = 0; r < s.out_dim; ++r) {
      for (int c = 0; c < s.in_dim; ++c) layer.weight(r, c) = dist(rng);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

namespace {

void check_input(const Network& net, const Matrix& x) {
  if (net.layers.empty()) throw std::invalid_argument("forward: empty network");
  if (x.rows() != net.in_dim()) {
    throw std::invalid_argument("forward: input has " + std::to_string(x.rows()) +
                                " rows, network expects " + std::to_string(net.in_dim()));
  }
  if (!x.allFinite()) throw std::domain_error("forward: non-finite input");
}

Matrix activate(const Matrix& pre, Activation a) {
  if (a == Activation::Tanh) return pre.array().tanh().matrix();
  return pre;
}

}  // namespace

ForwardResult forward(const Network& net, const Matrix& x) {
  check_input(net, x);
  ForwardTape tape;
  tape.input = x;
  tape.pre.reserve(net.layers.size());
  tape.post.reserve(net.layers.size());
  const Matrix* a = &tape.input;
  for (const auto& layer : net.layers) {
    Matrix z = layer.weight * (*a);
    z.colwise() += layer.bias;
    tape.post.push_back(activate(z, layer.activation));
    tape.pre.push_back(std::move(z));
    a = &tape.post.back();
  }
  Matrix y = tape.post.back();
  return {std::move(y), std::move(tape)};
}

Matrix evaluate(const Network& net, const Matrix& x) {
  check_input(net, x);
  Matrix a = x;
  for (const auto& layer : net.layers) {
    Matrix z = layer.weight * a;
    z.colwise() += layer.bias;
    a = activate(z, layer.activation);
  }
  return a;
}

Vector evaluate(const Network& net, const Vector& x) {
  Matrix m = evaluate(net, Matrix(x));
  return m.col(0);
}

namespace {

template <bool kWithParams>
Matrix backward_impl(const ForwardTape& tape, const Network& net, const Matrix& dl_dy,
                     Network* grads) {
  const std::size_t n_layers = net.layers.size();
  if (tape.pre.size() != n_layers || tape.post.size() != n_layers) {
    throw std::invalid_argument("backward: tape/network layer count mismatch");
  }
  if (dl_dy.rows() != net.out_dim() || dl_dy.cols() != tape.batch_size()) {
    throw std::invalid_argument("backward: dL/dy shape does not match the recorded output");
  }
  Matrix delta = dl_dy;
  for (std::size_t k = n_layers; k-- > 0;) {
    const auto& layer = net.layers[k];
    if (tape.pre[k].rows() != layer.out_dim()) {
      throw std::invalid_argument("backward: tape/params shape mismatch at layer " +
                                  std::to_string(k));
    }
    if (layer.activation == Activation::Tanh) {
      delta.array() *= 1.0 - tape.post[k].array().square();
    }
    const Matrix& a_prev = k == 0 ? tape.input : tape.post[k - 1];
    if constexpr (kWithParams) {
      grads->layers[k].weight.noalias() = delta * a_prev.transpose();
      grads->layers[k].bias = delta.rowwise().sum();
    }
    delta = layer.weight.transpose() * delta;
  }
  return delta;
}

}  // namespace

BackwardResult backward(const ForwardTape& tape, const Network& net, const Matrix& dl_dy) {
  BackwardResult out{net.zeros_like(), Matrix()};
  out.input_grads = backward_impl<true>(tape, net, dl_dy, &out.param_grads);
  return out;
}

Matrix backward_input(const ForwardTape& tape, const Network& net, const Matrix& dl_dy) {
  return backward_impl<false>(tape, net, dl_dy, nullptr);
}

}  // namespace musculo::nn
