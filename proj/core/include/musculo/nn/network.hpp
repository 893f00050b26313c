#pragma once

// Dense feedforward networks with reverse-mode gradients for both the
// parameters and the input. Batches are stored column-wise: an (in_dim x N)
// matrix holds N samples.

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace musculo::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation : std::uint8_t { Tanh = 0, Identity = 1 };

std::string_view to_string(Activation a);

struct LayerSpec {
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::Tanh;
};

struct Layer {
  Matrix weight;  // out_dim x in_dim
  Vector bias;    // out_dim
  Activation activation = Activation::Tanh;

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }
};

/// Parameters of a chain of dense layers. Also used as the container for
/// parameter gradients and Adam moments, which share the same shapes.
struct Network {
  std::vector<Layer> layers;

  int in_dim() const;
  int out_dim() const;
  std::size_t parameter_count() const;
  std::vector<LayerSpec> specs() const;

  /// Zero-valued network with the same shapes and activations.
  Network zeros_like() const;

  /// Euclidean norm over every weight and bias entry.
  double norm() const;
  bool all_finite() const;
  bool same_shape(const Network& other) const;

  Network& operator+=(const Network& other);
  Network& operator*=(double s);

  bool operator==(const Network& other) const;
};

/// Throws std::invalid_argument if the dims do not chain or are non-positive.
void check_chain(const std::vector<LayerSpec>& specs);

/// Weights uniform in [-1/sqrt(in_dim), 1/sqrt(in_dim)], biases zero.
/// Deterministic in `seed`.
Network init_network(const std::vector<LayerSpec>& specs, std::uint64_t seed);

/// Intermediates of one forward pass: input, then per layer the
/// pre-activation and post-activation matrices.
struct ForwardTape {
  Matrix input;
  std::vector<Matrix> pre;
  std::vector<Matrix> post;

  const Matrix& output() const { return post.back(); }
  int batch_size() const { return static_cast<int>(input.cols()); }
};

struct ForwardResult {
  Matrix output;
  ForwardTape tape;
};

/// Batched forward pass. Throws std::invalid_argument on a dimension
/// mismatch and std::domain_error on non-finite input.
ForwardResult forward(const Network& net, const Matrix& x);

/// Forward pass without recording a tape.
Matrix evaluate(const Network& net, const Matrix& x);
Vector evaluate(const Network& net, const Vector& x);

struct BackwardResult {
  Network param_grads;  // summed over the batch columns
  Matrix input_grads;   // in_dim x N
};

/// Reverse-mode pass for the recorded forward. `dl_dy` has the shape of the
/// output; parameter gradients are summed over columns, so a caller that
/// wants a batch mean scales `dl_dy` by 1/N.
BackwardResult backward(const ForwardTape& tape, const Network& net, const Matrix& dl_dy);

/// Input gradient only; skips the parameter-gradient products.
Matrix backward_input(const ForwardTape& tape, const Network& net, const Matrix& dl_dy);

}  // namespace musculo::nn
