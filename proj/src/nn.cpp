#include "alp/nn.hpp"

#include <cmath>
#include <sstream>

#include "alp/errors.hpp"

namespace alp {

namespace {

double act(Activation a, double z) {
  switch (a) {
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kTanh: return std::tanh(z);
    case Activation::kSoftplus: return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
    case Activation::kIdentity: return z;
  }
  return z;
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double act_d1(Activation a, double z) {
  switch (a) {
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::kSoftplus: return logistic(z);
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

double act_d2(Activation a, double z) {
  switch (a) {
    case Activation::kRelu: return 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return -2.0 * t * (1.0 - t * t);
    }
    case Activation::kSoftplus: {
      const double s = logistic(z);
      return s * (1.0 - s);
    }
    case Activation::kIdentity: return 0.0;
  }
  return 0.0;
}

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

void check_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch (got " << got << ", expected " << want << ")";
    throw InvalidArgument(msg.str());
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSoftplus: return "softplus";
    case Activation::kIdentity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "softplus") return Activation::kSoftplus;
  if (s == "identity" || s == "linear") return Activation::kIdentity;
  throw InvalidArgument("unknown activation '" + s + "'");
}

Xoshiro256::Xoshiro256(std::uint64_t seed) {
  for (auto& s : s_) s = splitmix64(seed);
}

std::uint64_t Xoshiro256::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Xoshiro256::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

MLP::MLP(std::vector<std::size_t> layer_dims, Activation hidden, Activation output,
         std::uint64_t seed)
    : dims_(std::move(layer_dims)), hidden_(hidden), output_(output), seed_(seed) {
  if (dims_.size() < 2) throw InvalidArgument("MLP: need at least input and output dims");
  for (std::size_t d : dims_) {
    if (d == 0) throw InvalidArgument("MLP: layer dims must be positive");
  }
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(total);
    total += dims_[l] * dims_[l + 1] + dims_[l + 1];
  }
  params_.assign(total, 0.0);
  Xoshiro256 rng(seed);
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const double fan_in = static_cast<double>(dims_[l]);
    const double fan_out = static_cast<double>(dims_[l + 1]);
    const bool he = activation_of(l) == Activation::kRelu;
    const double limit = he ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
    const std::size_t n = dims_[l] * dims_[l + 1];
    for (std::size_t k = 0; k < n; ++k) {
      params_[offsets_[l] + k] = limit * (2.0 * rng.uniform() - 1.0);
    }
  }
}

double& MLP::weight(std::size_t layer, std::size_t in, std::size_t out) {
  return params_[offsets_[layer] + in * dims_[layer + 1] + out];
}
double MLP::weight(std::size_t layer, std::size_t in, std::size_t out) const {
  return params_[offsets_[layer] + in * dims_[layer + 1] + out];
}
double& MLP::bias(std::size_t layer, std::size_t out) { return params_[bias_offset(layer) + out]; }
double MLP::bias(std::size_t layer, std::size_t out) const {
  return params_[bias_offset(layer) + out];
}

void MlpWorkspace::prepare(const MLP& net) {
  const auto& dims = net.layer_dims();
  if (dims == prepared_dims) return;
  prepared_dims = dims;
  pre.assign(dims.size(), {});
  post.assign(dims.size(), {});
  pre_dot.assign(dims.size(), {});
  post_dot.assign(dims.size(), {});
  std::size_t widest = 0;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    pre[l].assign(dims[l], 0.0);
    post[l].assign(dims[l], 0.0);
    pre_dot[l].assign(dims[l], 0.0);
    post_dot[l].assign(dims[l], 0.0);
    widest = std::max(widest, dims[l]);
  }
  g_post.assign(widest, 0.0);
  g_post_dot.assign(widest, 0.0);
  g_next.assign(widest, 0.0);
  g_next_dot.assign(widest, 0.0);
}

namespace {

void forward_impl(const MLP& net, std::span<const double> input, const double* direction,
                  MlpWorkspace& ws) {
  check_dim(input.size(), net.input_dim(), "mlp_forward");
  ws.prepare(net);
  ws.has_tangent = direction != nullptr;
  const auto& dims = net.layer_dims();
  const auto params = net.params();
  std::copy(input.begin(), input.end(), ws.post[0].begin());
  if (direction) std::copy(direction, direction + dims[0], ws.post_dot[0].begin());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const std::size_t din = dims[l];
    const std::size_t dout = dims[l + 1];
    const double* w = params.data() + net.weight_offset(l);
    const double* b = params.data() + net.bias_offset(l);
    auto& z = ws.pre[l + 1];
    const auto& a = ws.post[l];
    std::copy(b, b + dout, z.begin());
    for (std::size_t i = 0; i < din; ++i) {
      const double ai = a[i];
      const double* row = w + i * dout;
      for (std::size_t j = 0; j < dout; ++j) z[j] += ai * row[j];
    }
    const Activation fn = net.activation_of(l);
    auto& out = ws.post[l + 1];
    for (std::size_t j = 0; j < dout; ++j) out[j] = act(fn, z[j]);
    if (direction) {
      auto& zd = ws.pre_dot[l + 1];
      const auto& ad = ws.post_dot[l];
      std::fill(zd.begin(), zd.end(), 0.0);
      for (std::size_t i = 0; i < din; ++i) {
        const double ti = ad[i];
        const double* row = w + i * dout;
        for (std::size_t j = 0; j < dout; ++j) zd[j] += ti * row[j];
      }
      auto& od = ws.post_dot[l + 1];
      for (std::size_t j = 0; j < dout; ++j) od[j] = act_d1(fn, z[j]) * zd[j];
    }
  }
}

}  // namespace

std::span<const double> mlp_forward(const MLP& net, std::span<const double> input,
                                    MlpWorkspace& ws) {
  forward_impl(net, input, nullptr, ws);
  return ws.post.back();
}

std::vector<double> mlp_forward(const MLP& net, std::span<const double> input) {
  MlpWorkspace ws;
  const auto out = mlp_forward(net, input, ws);
  return {out.begin(), out.end()};
}

void mlp_forward_tangent(const MLP& net, std::span<const double> input,
                         std::span<const double> direction, MlpWorkspace& ws) {
  check_dim(direction.size(), net.input_dim(), "mlp_forward_tangent");
  forward_impl(net, input, direction.data(), ws);
}

void mlp_backward(const MLP& net, MlpWorkspace& ws, std::span<const double> upstream_value,
                  std::span<const double> upstream_tangent, std::span<double> grads) {
  const auto& dims = net.layer_dims();
  check_dim(upstream_value.size(), net.output_dim(), "mlp_backward");
  check_dim(grads.size(), net.num_params(), "mlp_backward");
  const bool tangent = !upstream_tangent.empty();
  if (tangent) {
    check_dim(upstream_tangent.size(), net.output_dim(), "mlp_backward");
    if (!ws.has_tangent) {
      throw InvalidArgument("mlp_backward: tangent upstream given but forward pass had none");
    }
  }
  const auto params = net.params();
  std::copy(upstream_value.begin(), upstream_value.end(), ws.g_post.begin());
  if (tangent) std::copy(upstream_tangent.begin(), upstream_tangent.end(), ws.g_post_dot.begin());

  for (std::size_t l = net.num_layers(); l-- > 0;) {
    const std::size_t din = dims[l];
    const std::size_t dout = dims[l + 1];
    const Activation fn = net.activation_of(l);
    const auto& z = ws.pre[l + 1];
    // g_post becomes dL/dz, g_post_dot becomes dL/dz_dot
    for (std::size_t j = 0; j < dout; ++j) {
      const double d1 = act_d1(fn, z[j]);
      double gz = ws.g_post[j] * d1;
      if (tangent) {
        gz += ws.g_post_dot[j] * act_d2(fn, z[j]) * ws.pre_dot[l + 1][j];
        ws.g_post_dot[j] *= d1;
      }
      ws.g_post[j] = gz;
    }
    const double* w = params.data() + net.weight_offset(l);
    double* gw = grads.data() + net.weight_offset(l);
    double* gb = grads.data() + net.bias_offset(l);
    const auto& a = ws.post[l];
    for (std::size_t j = 0; j < dout; ++j) gb[j] += ws.g_post[j];
    for (std::size_t i = 0; i < din; ++i) {
      double* grow = gw + i * dout;
      const double ai = a[i];
      for (std::size_t j = 0; j < dout; ++j) grow[j] += ai * ws.g_post[j];
      if (tangent) {
        const double ti = ws.post_dot[l][i];
        for (std::size_t j = 0; j < dout; ++j) grow[j] += ti * ws.g_post_dot[j];
      }
    }
    if (l == 0) break;
    for (std::size_t i = 0; i < din; ++i) {
      const double* row = w + i * dout;
      double s = 0.0;
      double sd = 0.0;
      for (std::size_t j = 0; j < dout; ++j) {
        s += row[j] * ws.g_post[j];
        if (tangent) sd += row[j] * ws.g_post_dot[j];
      }
      ws.g_next[i] = s;
      ws.g_next_dot[i] = sd;
    }
    std::copy(ws.g_next.begin(), ws.g_next.begin() + din, ws.g_post.begin());
    if (tangent) std::copy(ws.g_next_dot.begin(), ws.g_next_dot.begin() + din, ws.g_post_dot.begin());
  }
}

std::vector<double> mlp_grad_weights(const MLP& net, std::span<const double> input,
                                     std::span<const double> upstream) {
  MlpWorkspace ws;
  mlp_forward(net, input, ws);
  std::vector<double> grads(net.num_params(), 0.0);
  mlp_backward(net, ws, upstream, {}, grads);
  return grads;
}

std::vector<double> mlp_input_derivative(const MLP& net, std::span<const double> input) {
  const std::size_t din = net.input_dim();
  const std::size_t dout = net.output_dim();
  std::vector<double> jac(dout * din, 0.0);
  MlpWorkspace ws;
  std::vector<double> dir(din, 0.0);
  for (std::size_t k = 0; k < din; ++k) {
    std::fill(dir.begin(), dir.end(), 0.0);
    dir[k] = 1.0;
    mlp_forward_tangent(net, input, dir, ws);
    for (std::size_t r = 0; r < dout; ++r) jac[r * din + k] = ws.post_dot.back()[r];
  }
  return jac;
}

void adam_step(AdamState& state, std::span<double> weights, std::span<const double> gradients) {
  check_dim(gradients.size(), weights.size(), "adam_step");
  check_dim(state.first_moment.size(), weights.size(), "adam_step");
  check_dim(state.second_moment.size(), weights.size(), "adam_step");
  if (!(state.beta1 > 0.0 && state.beta1 < 1.0 && state.beta2 > 0.0 && state.beta2 < 1.0)) {
    throw InvalidArgument("adam_step: beta1, beta2 must lie in (0, 1)");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double g = gradients[k];
    double& m = state.first_moment[k];
    double& v = state.second_moment[k];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    weights[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

nlohmann::json mlp_to_json(const MLP& net, std::uint64_t step_count) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["layer_dims"] = net.layer_dims();
  j["hidden_activation"] = to_string(net.hidden_activation());
  j["output_transform"] = to_string(net.output_transform());
  auto weights = nlohmann::json::array();
  auto biases = nlohmann::json::array();
  const auto& dims = net.layer_dims();
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    auto w = nlohmann::json::array();
    for (std::size_t i = 0; i < dims[l]; ++i) {
      auto row = nlohmann::json::array();
      for (std::size_t o = 0; o < dims[l + 1]; ++o) row.push_back(net.weight(l, i, o));
      w.push_back(std::move(row));
    }
    weights.push_back(std::move(w));
    auto b = nlohmann::json::array();
    for (std::size_t o = 0; o < dims[l + 1]; ++o) b.push_back(net.bias(l, o));
    biases.push_back(std::move(b));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  j["seed"] = net.seed();
  j["step_count"] = step_count;
  return j;
}

MLP mlp_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != 1) {
      throw SchemaError("mlp_from_json: unsupported schema_version");
    }
    const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    MLP net(dims, activation_from_string(j.at("hidden_activation").get<std::string>()),
            activation_from_string(j.at("output_transform").get<std::string>()),
            j.value("seed", std::uint64_t{0}));
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (weights.size() != net.num_layers() || biases.size() != net.num_layers()) {
      throw SchemaError("mlp_from_json: layer count does not match layer_dims");
    }
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      const auto& w = weights[l];
      if (w.size() != dims[l]) throw SchemaError("mlp_from_json: weight rows mismatch");
      for (std::size_t i = 0; i < dims[l]; ++i) {
        if (w[i].size() != dims[l + 1]) throw SchemaError("mlp_from_json: weight cols mismatch");
        for (std::size_t o = 0; o < dims[l + 1]; ++o) {
          const double v = w[i][o].get<double>();
          if (!std::isfinite(v)) throw SchemaError("mlp_from_json: non-finite weight");
          net.weight(l, i, o) = v;
        }
      }
      if (biases[l].size() != dims[l + 1]) throw SchemaError("mlp_from_json: bias size mismatch");
      for (std::size_t o = 0; o < dims[l + 1]; ++o) net.bias(l, o) = biases[l][o].get<double>();
    }
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("mlp_from_json: ") + e.what());
  }
}

}  // namespace alp
