#include <cmath>
#include <random>

#include "alp/errors.hpp"
#include "alp/nn.hpp"
#include "doctest.h"
#include "frozen.hpp"

using namespace alp;

namespace {

void randomize(MLP& net, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& w : net.params()) w = u(rng);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double rel_err(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::max(std::fabs(a), std::fabs(b))); }

// Largest relative error of mlp_grad_weights against central differences.
double grad_error(MLP& net, const std::vector<double>& x, const std::vector<double>& up, double h) {
  const auto g = mlp_grad_weights(net, x, up);
  double worst = 0.0;
  for (std::size_t i = 0; i < net.num_params(); ++i) {
    const double keep = net.params()[i];
    net.params()[i] = keep + h;
    const double fp = dot(mlp_forward(net, x), up);
    net.params()[i] = keep - h;
    const double fm = dot(mlp_forward(net, x), up);
    net.params()[i] = keep;
    worst = std::max(worst, rel_err(g[i], (fp - fm) / (2 * h)));
  }
  return worst;
}

}  // namespace

TEST_CASE("forward pass") {
  MLP zero({2, 4, 3}, Activation::kRelu, Activation::kSoftplus, 0);
  for (double& w : zero.params()) w = 0.0;
  for (double y : mlp_forward(zero, std::vector<double>{0.3, -2.0})) CHECK(std::fabs(y - std::log(2.0)) < 1e-15);

  MLP id({1, 1}, Activation::kRelu, Activation::kIdentity, 0);
  id.weight(0, 0, 0) = 1.0;
  id.bias(0, 0) = 0.0;
  CHECK(mlp_forward(id, std::vector<double>{-3.25})[0] == -3.25);

  MLP golden({1, 32, 32, 3}, Activation::kRelu, Activation::kSoftplus, 0);
  const auto y = mlp_forward(golden, std::vector<double>{0.5});
  for (int k = 0; k < 3; ++k) CHECK(std::fabs(y[k] - frozen::kGoldenNet[k]) < 1e-14);

  CHECK_THROWS_AS(mlp_forward(golden, std::vector<double>{0.5, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(MLP({3}, Activation::kRelu, Activation::kIdentity, 0), InvalidArgument);
  CHECK_THROWS_AS(MLP({1, 0, 3}, Activation::kRelu, Activation::kIdentity, 0), InvalidArgument);
}

TEST_CASE("initialization is seeded and bounded") {
  MLP a({1, 32, 32, 3}, Activation::kRelu, Activation::kSoftplus, 42);
  MLP b({1, 32, 32, 3}, Activation::kRelu, Activation::kSoftplus, 42);
  MLP c({1, 32, 32, 3}, Activation::kRelu, Activation::kSoftplus, 43);
  CHECK(a == b);
  CHECK(!(a == c));
  for (std::size_t l = 0; l < a.num_layers(); ++l) {
    const double fin = a.layer_dims()[l], fout = a.layer_dims()[l + 1];
    const double limit = l + 1 < a.num_layers() ? std::sqrt(6.0 / fin) : std::sqrt(6.0 / (fin + fout));
    for (std::size_t i = 0; i < fin; ++i)
      for (std::size_t j = 0; j < fout; ++j) CHECK(std::fabs(a.weight(l, i, j)) <= limit);
    for (std::size_t j = 0; j < fout; ++j) CHECK(a.bias(l, j) == 0.0);
  }
}

TEST_CASE("weight gradients") {
  MLP lin({3, 2}, Activation::kRelu, Activation::kIdentity, 0);
  randomize(lin, 1);
  const std::vector<double> x{0.5, -1.0, 2.0}, up{0.3, -0.7};
  const auto g = mlp_grad_weights(lin, x, up);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(std::fabs(g[lin.weight_offset(0) + i * 2 + j] - x[i] * up[j]) < 1e-15);
  for (std::size_t j = 0; j < 2; ++j) CHECK(g[lin.bias_offset(0) + j] == up[j]);

  MLP net({1, 32, 32, 3}, Activation::kRelu, Activation::kSoftplus, 0);
  for (double v : mlp_grad_weights(net, std::vector<double>{0.4}, std::vector<double>{0, 0, 0})) CHECK(v == 0.0);

  // ReLU: central differences are exact away from kinks
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int draw = 0; draw < 100; ++draw) {
    MLP r({1, 32, 32, 3}, Activation::kRelu, Activation::kSoftplus, draw);
    const std::vector<double> xi{u(rng)}, upi{u(rng), u(rng), u(rng)};
    CHECK(grad_error(r, xi, upi, 1e-5) <= 1e-5);
  }
}

TEST_CASE("tanh gradient check over architectures") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::vector<std::vector<std::size_t>> shapes{{1, 8, 3}, {1, 32, 32, 3}, {1, 256, 256, 3}};
  for (const auto& dims : shapes) {
    const int draws = dims.size() == 4 && dims[1] == 256 ? 3 : 20;
    for (int draw = 0; draw < draws; ++draw) {
      MLP net(dims, Activation::kTanh, Activation::kSoftplus, 100 + draw);
      const std::vector<double> x{u(rng)}, up{u(rng), u(rng), u(rng)};
      CHECK(grad_error(net, x, up, 1e-6) <= 1e-6);
    }
  }
}

TEST_CASE("input derivative") {
  MLP zero({2, 5, 3}, Activation::kTanh, Activation::kIdentity, 0);
  for (double& w : zero.params()) w = 0.0;
  for (double v : mlp_input_derivative(zero, std::vector<double>{0.2, 0.3})) CHECK(v == 0.0);

  MLP lin({2, 3, 3}, Activation::kIdentity, Activation::kIdentity, 0);
  randomize(lin, 2);
  const auto jac = mlp_input_derivative(lin, std::vector<double>{0.1, 0.9});
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t i = 0; i < 2; ++i) {
      double want = 0.0;
      for (std::size_t k = 0; k < 3; ++k) want += lin.weight(0, i, k) * lin.weight(1, k, o);
      CHECK(std::fabs(jac[o * 2 + i] - want) < 1e-14);
    }

  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto act : {Activation::kTanh, Activation::kRelu, Activation::kSoftplus}) {
    for (int draw = 0; draw < 20; ++draw) {
      MLP net({2, 16, 16, 3}, act, Activation::kSoftplus, 200 + draw);
      std::vector<double> x{u(rng), u(rng)};
      const auto j = mlp_input_derivative(net, x);
      const double h = 1e-6;
      for (std::size_t i = 0; i < 2; ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const auto yp = mlp_forward(net, xp), ym = mlp_forward(net, xm);
        for (std::size_t o = 0; o < 3; ++o) {
          const double fd = (yp[o] - ym[o]) / (2 * h);
          // a ReLU kink inside [x - h, x + h] spoils the difference quotient; skip those
          if (act == Activation::kRelu) {
            const double fwd = (yp[o] - mlp_forward(net, x)[o]) / h;
            const double bwd = (mlp_forward(net, x)[o] - ym[o]) / h;
            if (std::fabs(fwd - bwd) > 1e-6 * std::max(1.0, std::fabs(fwd))) continue;
          }
          CHECK(rel_err(j[o * 2 + i], fd) <= 1e-6);
        }
      }
    }
  }
}

TEST_CASE("tangent stream equals the input Jacobian") {
  MLP net({2, 16, 16, 3}, Activation::kTanh, Activation::kSoftplus, 5);
  const std::vector<double> x{0.4, -0.2}, dir{0.0, 1.0};
  MlpWorkspace ws;
  mlp_forward_tangent(net, x, dir, ws);
  const auto jac = mlp_input_derivative(net, x);
  for (std::size_t o = 0; o < 3; ++o) CHECK(std::fabs(ws.post_dot.back()[o] - jac[o * 2 + 1]) < 1e-14);
}

TEST_CASE("backward through the tangent stream") {
  // d/dw of u . y + v . dy/dx_1 against central differences
  MLP net({2, 8, 8, 3}, Activation::kTanh, Activation::kSoftplus, 9);
  const std::vector<double> x{0.3, 0.6}, dir{0.0, 1.0}, uv{0.2, -0.4, 0.9}, ut{1.1, 0.3, -0.8};
  auto objective = [&]() {
    MlpWorkspace ws;
    mlp_forward_tangent(net, x, dir, ws);
    return dot(ws.post.back(), uv) + dot(ws.post_dot.back(), ut);
  };
  MlpWorkspace ws;
  mlp_forward_tangent(net, x, dir, ws);
  std::vector<double> g(net.num_params(), 0.0);
  mlp_backward(net, ws, uv, ut, g);
  const double h = 1e-6;
  for (std::size_t i = 0; i < net.num_params(); ++i) {
    const double keep = net.params()[i];
    net.params()[i] = keep + h;
    const double fp = objective();
    net.params()[i] = keep - h;
    const double fm = objective();
    net.params()[i] = keep;
    CHECK(rel_err(g[i], (fp - fm) / (2 * h)) <= 1e-6);
  }
}

TEST_CASE("Adam") {
  std::vector<double> w{1.0, -2.0};
  AdamState st(2, 1e-3);
  adam_step(st, w, std::vector<double>{0.0, 0.0});
  CHECK(w[0] == 1.0);
  CHECK(w[1] == -2.0);

  AdamState first(3, 0.05);
  std::vector<double> v{0.0, 0.0, 0.0};
  adam_step(first, v, std::vector<double>{3.0, -1e-3, 250.0});
  CHECK(std::fabs(v[0] + 0.05) < 1e-9);
  CHECK(std::fabs(v[1] - 0.05) < 1e-6);
  CHECK(std::fabs(v[2] + 0.05) < 1e-9);

  AdamState s(1, 0.1);
  std::vector<double> x{1.0};
  const double want[] = {frozen::kAdamW1, frozen::kAdamW2, frozen::kAdamW3};
  for (int t = 0; t < 3; ++t) {
    adam_step(s, x, std::vector<double>{2.0 * x[0]});
    CHECK(std::fabs(x[0] - want[t]) < 1e-15);
  }
  CHECK(s.step_count == 3);
}

TEST_CASE("training is bit-deterministic") {
  auto run = [] {
    MLP net({1, 16, 3}, Activation::kTanh, Activation::kSoftplus, 77);
    AdamState st(net.num_params(), 1e-2);
    for (int k = 0; k < 50; ++k) {
      std::vector<double> g(net.num_params(), 0.0);
      for (double x : {0.1, 0.5, 0.9}) {
        const auto y = mlp_forward(net, std::vector<double>{x});
        const std::vector<double> up{y[0] - x, y[1] - 1.0, y[2] - 2.0};
        const auto gi = mlp_grad_weights(net, std::vector<double>{x}, up);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gi[i];
      }
      adam_step(st, net.params(), g);
    }
    return net;
  };
  const MLP a = run(), b = run();
  CHECK(a == b);
}

TEST_CASE("JSON persistence") {
  MLP net({2, 7, 5, 3}, Activation::kTanh, Activation::kSoftplus, 31);
  randomize(net, 4, 3.0);
  const auto j = mlp_to_json(net, 17);
  CHECK(j.at("schema_version") == 1);
  CHECK(j.at("step_count") == 17);
  const MLP back = mlp_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back == net);
  auto bad = j;
  bad["schema_version"] = 2;
  CHECK_THROWS_AS(mlp_from_json(bad), SchemaError);
  auto wrong = j;
  wrong["layer_dims"] = {2, 7, 3};
  CHECK_THROWS_AS(mlp_from_json(wrong), SchemaError);
}

TEST_CASE("activation names") {
  for (auto a : {Activation::kRelu, Activation::kTanh, Activation::kSoftplus, Activation::kIdentity}) {
    CHECK(activation_from_string(to_string(a)) == a);
  }
  CHECK_THROWS_AS(activation_from_string("sigmoid"), InvalidArgument);
}
