#pragma once

// Small dense feedforward network with exact gradients, plus Adam.
//
// Layer i maps a_{i-1} (length d_{i-1}) to a_i = phi_i(a_{i-1} w_i + b_i) with
// w_i stored row-major as a d_{i-1} x d_i matrix. Hidden layers use the hidden
// activation; the last layer uses the output transform.
//
// Besides the value stream, the forward pass can carry a tangent stream
// (directional derivative with respect to the input), and the backward pass
// accepts upstream gradients for both streams. This is what lets a loss that
// depends on d(output)/d(input) be differentiated with respect to the weights.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace alp {

enum class Activation { kRelu, kTanh, kSoftplus, kIdentity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// xoshiro256** seeded through splitmix64.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);
  std::uint64_t next();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

 private:
  std::uint64_t s_[4];
};

class MLP {
 public:
  MLP() = default;
  /// He-uniform weights for ReLU hidden layers, Xavier-uniform otherwise; zero biases.
  MLP(std::vector<std::size_t> layer_dims, Activation hidden, Activation output,
      std::uint64_t seed);

  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  std::size_t num_layers() const { return dims_.size() - 1; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  Activation hidden_activation() const { return hidden_; }
  Activation output_transform() const { return output_; }
  std::uint64_t seed() const { return seed_; }

  /// All weights and biases, layer by layer (w_1, b_1, w_2, b_2, ...).
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  double& weight(std::size_t layer, std::size_t in, std::size_t out);
  double weight(std::size_t layer, std::size_t in, std::size_t out) const;
  double& bias(std::size_t layer, std::size_t out);
  double bias(std::size_t layer, std::size_t out) const;
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + dims_[layer] * dims_[layer + 1];
  }

  Activation activation_of(std::size_t layer) const {
    return layer + 1 == num_layers() ? output_ : hidden_;
  }

  bool operator==(const MLP&) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  Activation hidden_ = Activation::kRelu;
  Activation output_ = Activation::kIdentity;
  std::uint64_t seed_ = 0;
};

/// Per-evaluation buffers. One workspace per thread.
struct MlpWorkspace {
  std::vector<std::vector<double>> pre;      // z_i
  std::vector<std::vector<double>> post;     // a_i (post[0] is the input)
  std::vector<std::vector<double>> pre_dot;  // tangent of z_i
  std::vector<std::vector<double>> post_dot; // tangent of a_i
  std::vector<double> g_post, g_post_dot, g_next, g_next_dot;
  bool has_tangent = false;
  std::vector<std::size_t> prepared_dims;

  void prepare(const MLP& net);
};

/// Forward pass; the output is workspace.post.back().
std::span<const double> mlp_forward(const MLP& net, std::span<const double> input,
                                    MlpWorkspace& ws);
std::vector<double> mlp_forward(const MLP& net, std::span<const double> input);

/// Forward pass carrying the directional derivative along `direction` (in input
/// space). Output tangent is workspace.post_dot.back().
void mlp_forward_tangent(const MLP& net, std::span<const double> input,
                         std::span<const double> direction, MlpWorkspace& ws);

/// Accumulates into `grads` (size num_params) the gradient of
///   upstream_value . output + upstream_tangent . output_tangent
/// at the point cached in `ws` by the preceding forward call. Pass an empty
/// upstream_tangent when the forward pass carried no tangent.
void mlp_backward(const MLP& net, MlpWorkspace& ws, std::span<const double> upstream_value,
                  std::span<const double> upstream_tangent, std::span<double> grads);

/// Gradient of upstream . output with respect to every parameter.
std::vector<double> mlp_grad_weights(const MLP& net, std::span<const double> input,
                                     std::span<const double> upstream);

/// Jacobian d output / d input, row-major d_N x d_0. ReLU'(0) is taken as 0.
std::vector<double> mlp_input_derivative(const MLP& net, std::span<const double> input);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double lr) : first_moment(n, 0.0), second_moment(n, 0.0), learning_rate(lr) {}
};

/// One bias-corrected Adam update of `weights` in place.
void adam_step(AdamState& state, std::span<double> weights, std::span<const double> gradients);

nlohmann::json mlp_to_json(const MLP& net, std::uint64_t step_count = 0);
MLP mlp_from_json(const nlohmann::json& j);

}  // namespace alp
