#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "apo/common/error.hpp"
#include "apo/nn/adam.hpp"
#include "apo/nn/checkpoint.hpp"
#include "apo/nn/init.hpp"
#include "apo/nn/mlp.hpp"
#include "support.hpp"

using namespace apo;
using apo::testing::central_diff;
using apo::testing::normal_vec;
using apo::testing::relative_error;

namespace {

// Plain nested-loop forward pass, independent of the flat parameter layout.
std::vector<double> reference_forward(const nn::MlpNet& net, std::vector<double> x) {
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const nn::DenseMatrix w = net.weight(l);
    const std::vector<double> b = net.bias(l);
    std::vector<double> y(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
      double s = b[r];
      for (std::size_t c = 0; c < w.cols(); ++c) s += w(r, c) * x[c];
      switch (net.activations()[l]) {
        case nn::Activation::tanh: y[r] = std::tanh(s); break;
        case nn::Activation::relu: y[r] = s > 0 ? s : 0.0; break;
        case nn::Activation::identity: y[r] = s; break;
      }
    }
    x = std::move(y);
  }
  return x;
}

nn::MlpNet random_net(std::vector<std::size_t> sizes, nn::Activation act, Rng& rng) {
  nn::MlpNet net(std::move(sizes), act);
  auto p = net.mutable_parameters();
  const auto v = normal_vec(p.size(), rng, 0.5);
  std::copy(v.begin(), v.end(), p.begin());
  return net;
}

}  // namespace

TEST_CASE("dense matrix product against hand result") {
  nn::DenseMatrix a(2, 3), b(3, 2);
  double k = 1.0;
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c) a(r, c) = k++;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c) b(r, c) = k++;
  const nn::DenseMatrix p = a.matmul(b);
  CHECK(p(0, 0) == 1 * 7 + 2 * 9 + 3 * 11);
  CHECK(p(1, 1) == 4 * 8 + 5 * 10 + 6 * 12);
  CHECK(a.transposed().transposed() == a);
}

TEST_CASE("mlp forward matches nested-loop reference") {
  Rng rng(11);
  for (auto act : {nn::Activation::tanh, nn::Activation::relu}) {
    const nn::MlpNet net = random_net({5, 7, 6, 3}, act, rng);
    for (int t = 0; t < 10; ++t) {
      const auto x = normal_vec(5, rng);
      const auto y = net.predict(x);
      const auto ref = reference_forward(net, x);
      for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("mlp backward: parameter and input gradients match central differences") {
  Rng rng(12);
  for (auto act : {nn::Activation::tanh, nn::Activation::identity}) {
    nn::MlpNet net = random_net({4, 6, 5, 2}, act, rng);
    const auto x0 = normal_vec(4, rng);
    const auto w = normal_vec(2, rng);  // loss = w . net(x)
    auto loss_at = [&](std::span<const double> x) {
      const auto y = net.predict(x);
      return w[0] * y[0] + w[1] * y[1];
    };
    std::vector<double> pg(net.parameter_count(), 0.0);
    auto fr = net.forward(x0);
    const auto xg = net.backward(fr.tape, w, pg);

    std::vector<double> params(net.parameters().begin(), net.parameters().end());
    auto fd = central_diff(net.mutable_parameters(), [&] { return loss_at(x0); });
    CHECK(relative_error(pg, fd) < 1e-7);

    std::vector<double> x = x0;
    auto fdx = central_diff(x, [&] { return loss_at(x); });
    CHECK(relative_error(xg, fdx) < 1e-7);
  }
}

TEST_CASE("backward accumulates into the gradient buffer") {
  Rng rng(13);
  nn::MlpNet net = random_net({3, 4, 2}, nn::Activation::tanh, rng);
  const auto x = normal_vec(3, rng);
  const std::vector<double> og{1.0, -2.0};
  std::vector<double> once(net.parameter_count(), 0.0), twice(net.parameter_count(), 0.0);
  auto fr = net.forward(x);
  net.backward(fr.tape, og, once);
  net.backward(fr.tape, og, twice);
  net.backward(fr.tape, og, twice);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice[i] == doctest::Approx(2 * once[i]));
}

TEST_CASE("stale tape is rejected after a parameter change") {
  Rng rng(14);
  nn::MlpNet net = random_net({3, 4, 2}, nn::Activation::tanh, rng);
  auto fr = net.forward(normal_vec(3, rng));
  std::vector<double> g(net.parameter_count(), 0.0);
  net.mutable_parameters()[0] += 1.0;
  CHECK_THROWS_AS(net.backward(fr.tape, std::vector<double>{1.0, 1.0}, g), StaleTape);

  nn::MlpNet copy = net;
  auto fr2 = net.forward(normal_vec(3, rng));
  CHECK_THROWS_AS(copy.backward(fr2.tape, std::vector<double>{1.0, 1.0}, g), StaleTape);
}

TEST_CASE("forward rejects bad inputs") {
  nn::MlpNet net({3, 4, 2});
  CHECK_THROWS_AS(net.predict(std::vector<double>{1.0, 2.0}), ContractViolation);
  CHECK_THROWS_AS(net.predict(std::vector<double>{1.0, NAN, 0.0}), RejectedInput);
  CHECK_THROWS_AS(nn::MlpNet({3}), ContractViolation);
}

TEST_CASE("adam update against hand-computed steps") {
  std::vector<double> p{1.0, -2.0}, g{0.5, -0.1};
  nn::AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
  nn::AdamState st(2, cfg);
  std::vector<nn::ParamBlock> blocks{{p, g, "p"}};
  st.step(blocks);
  // first step moves each coordinate by lr * sign(g) (up to epsilon)
  CHECK(p[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-7));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.1).epsilon(1e-7));

  g = {0.5, 0.3};
  const double p0 = p[0], p1 = p[1];
  st.step(blocks);
  const double m0 = 0.9 * 0.05 + 0.1 * 0.5, v0 = 0.999 * 0.00025 + 0.001 * 0.25;
  const double m1 = 0.9 * -0.01 + 0.1 * 0.3, v1 = 0.999 * 0.00001 + 0.001 * 0.09;
  const double bc1 = 1 - 0.81, bc2 = 1 - 0.999 * 0.999;
  CHECK(p[0] == doctest::Approx(p0 - 0.1 * (m0 / bc1) / (std::sqrt(v0 / bc2) + 1e-8)).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(p1 - 0.1 * (m1 / bc1) / (std::sqrt(v1 / bc2) + 1e-8)).epsilon(1e-12));
  CHECK(st.step_count() == 2);
}

TEST_CASE("adam: zero gradient from a fresh state leaves parameters unchanged") {
  std::vector<double> p{0.3, 0.4, 0.5}, g(3, 0.0);
  nn::AdamState st(3);
  std::vector<nn::ParamBlock> blocks{{p, g, "p"}};
  for (int i = 0; i < 5; ++i) st.step(blocks);
  CHECK(p == std::vector<double>{0.3, 0.4, 0.5});
}

TEST_CASE("adam rejects a non-finite gradient without touching anything") {
  std::vector<double> a{1.0, 2.0}, ga{0.1, 0.1}, b{3.0}, gb{INFINITY};
  nn::AdamState st(3);
  std::vector<nn::ParamBlock> blocks{{a, ga, "first"}, {b, gb, "second"}};
  try {
    st.step(blocks);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(std::string(e.what()).find("second") != std::string::npos);
    CHECK(std::string(e.what()).find('1') != std::string::npos);
  }
  CHECK(a == std::vector<double>{1.0, 2.0});
  CHECK(b[0] == 3.0);
  CHECK(st.step_count() == 0);
}

TEST_CASE("gradient clipping") {
  std::vector<double> v1{0, 0}, g1{3.0, 0.0}, v2{0}, g2{4.0};
  std::vector<nn::ParamBlock> blocks{{v1, g1, "a"}, {v2, g2, "b"}};
  CHECK(nn::global_grad_norm(blocks) == doctest::Approx(5.0));
  const double before = nn::clip_grad_norm(blocks, 0.5);
  CHECK(before == doctest::Approx(5.0));
  CHECK(nn::global_grad_norm(blocks) == doctest::Approx(0.5).epsilon(1e-6));
  // below the threshold: untouched
  const double small = nn::clip_grad_norm(blocks, 10.0);
  CHECK(small == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(nn::global_grad_norm(blocks) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("orthogonal init: rows or columns are orthonormal times gain, biases zero") {
  Rng rng(3);
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{6, 4}, {4, 6}, {5, 5}}) {
    const nn::DenseMatrix w = nn::orthogonal_matrix(r, c, 2.0, rng);
    const bool tall = r >= c;
    const nn::DenseMatrix gram = tall ? w.transposed().matmul(w) : w.matmul(w.transposed());
    for (std::size_t i = 0; i < gram.rows(); ++i)
      for (std::size_t j = 0; j < gram.cols(); ++j)
        CHECK(gram(i, j) == doctest::Approx(i == j ? 4.0 : 0.0).epsilon(1e-12).scale(1.0));
  }
  nn::MlpNet net({4, 8, 2});
  nn::orthogonal_init(net, std::sqrt(2.0), 0.01, 42);
  for (std::size_t l = 0; l < net.num_layers(); ++l)
    for (double b : net.bias(l)) CHECK(b == 0.0);
  nn::MlpNet again({4, 8, 2});
  nn::orthogonal_init(again, std::sqrt(2.0), 0.01, 42);
  CHECK(std::equal(net.parameters().begin(), net.parameters().end(), again.parameters().begin()));
}

TEST_CASE("checkpoint round trip is exact") {
  Rng rng(5);
  nn::Checkpoint ck;
  ck.nets.emplace("a", random_net({3, 5, 2}, nn::Activation::tanh, rng));
  ck.nets.emplace("b", random_net({2, 2}, nn::Activation::identity, rng));
  ck.vectors["v"] = {0.1, -1e-300, 1e300, 1.0 / 3.0};
  ck.meta["note"] = "has spaces in it";
  const nn::Checkpoint back = nn::Checkpoint::parse(ck.serialize());
  CHECK(back.meta == ck.meta);
  CHECK(back.vectors == ck.vectors);
  for (const auto& [name, net] : ck.nets) {
    const auto& n2 = back.nets.at(name);
    CHECK(n2.layer_sizes() == net.layer_sizes());
    CHECK(n2.activations() == net.activations());
    CHECK(std::equal(net.parameters().begin(), net.parameters().end(), n2.parameters().begin()));
  }

  const auto path = std::filesystem::temp_directory_path() / "apo_ck_roundtrip.txt";
  ck.save(path);
  const nn::Checkpoint loaded = nn::Checkpoint::load(path);
  CHECK(loaded.serialize() == ck.serialize());
  std::filesystem::remove(path);

  CHECK_THROWS_AS(nn::Checkpoint::parse("apo-checkpoint 1\nlayer 0 1 1 1.0\n"), RejectedInput);
  CHECK_THROWS_AS(nn::Checkpoint::parse("garbage"), RejectedInput);
}
