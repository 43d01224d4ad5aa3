#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>

#include <gtest/gtest.h>

#include "attnav/checkpoint.hpp"
#include "attnav/errors.hpp"
#include "attnav/gradcheck.hpp"
#include "attnav/ops.hpp"
#include "attnav/rng.hpp"

using namespace attnav;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = lo + (hi - lo) * uniform_unit(rng);
  return Tensor(std::move(shape), std::move(v));
}

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(Tensor, RejectsMismatchedData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5, 0.0)), DimensionError);
  EXPECT_THROW(Tensor(Shape{2, 0}), DimensionError);
  EXPECT_EQ(Tensor::scalar(4.0).shape(), Shape{1});
}

TEST(Affine, Identity) {
  Graph g;
  Var y = affine(g.constant(Tensor::matrix(2, 2, {1, 0, 0, 1})), g.constant(Tensor::vector({3, 4})));
  EXPECT_EQ(y.value()[0], 3.0);
  EXPECT_EQ(y.value()[1], 4.0);
}

TEST(Affine, HandMultiplication) {
  Graph g;
  Var y = affine(g.constant(Tensor::matrix(2, 2, {1, 2, 3, 4})), g.constant(Tensor::vector({1, 1})));
  EXPECT_EQ(y.value()[0], 3.0);
  EXPECT_EQ(y.value()[1], 7.0);
}

TEST(Affine, ZeroMatrix) {
  Graph g;
  Var y = affine(g.constant(Tensor({2, 2}, 0.0)), g.constant(Tensor::vector({-5.5, 9})));
  EXPECT_EQ(y.value()[0], 0.0);
  EXPECT_EQ(y.value()[1], 0.0);
}

TEST(Affine, ShapeErrorNamesBothShapes) {
  Graph g;
  try {
    affine(g.constant(Tensor({2, 3})), g.constant(Tensor({2})));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2]"), std::string::npos) << msg;
  }
}

TEST(Softmax, UniformPotentials) {
  for (double c : {-7.0, 0.0, 3.5, 1e6}) {
    Graph g;
    Var p = softmax_flat(g.constant(Tensor::vector({c, c, c, c})));
    for (double x : p.value().data()) EXPECT_DOUBLE_EQ(x, 0.25);
  }
}

TEST(Softmax, ClosedFormRatio) {
  Graph g;
  Var p = softmax_flat(g.constant(Tensor::vector({0.0, std::log(3.0)})));
  EXPECT_NEAR(p.value()[0], 0.25, 1e-15);
  EXPECT_NEAR(p.value()[1], 0.75, 1e-15);
}

TEST(Softmax, NoOverflow) {
  Graph g;
  Var p = softmax_flat(g.constant(Tensor::vector({1000.0, 0.0})));
  EXPECT_TRUE(p.value().all_finite());
  EXPECT_NEAR(p.value()[0], 1.0, 1e-300);
  EXPECT_LT(p.value()[1], 1e-300);
}

TEST(Softmax, NaNInputIsNumericError) {
  Graph g;
  EXPECT_THROW(softmax_flat(g.constant(Tensor::vector({0.0, std::nan("")}))), NumericError);
}

TEST(Softmax, SumsToOneOnRandomInputs) {
  Rng rng = make_rng(11, "softmax-sum");
  for (int trial = 0; trial < 200; ++trial) {
    Graph g;
    Var p = softmax_flat(g.constant(random_tensor(rng, {1 + uniform_index(rng, 60)}, -30, 30)));
    double s = 0.0;
    for (double x : p.value().data()) {
      EXPECT_GE(x, 0.0);
      s += x;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Lstm, ZeroFixpoint) {
  Graph g;
  const LstmWeights w{g.constant(Tensor({12, 5})), g.constant(Tensor({12, 3})), g.constant(Tensor({12}))};
  auto [h, c] = lstm_step(w, g.constant(Tensor::vector({1, -2, 3, 0.5, 7})), g.constant(Tensor({3})),
                          g.constant(Tensor({3})));
  for (double x : h.value().data()) EXPECT_EQ(x, 0.0);
  for (double x : c.value().data()) EXPECT_EQ(x, 0.0);
}

TEST(Lstm, SaturatedForgetGateKeepsCell) {
  Graph g;
  std::vector<double> bias(12, 0.0);
  for (int k = 3; k < 6; ++k) bias[static_cast<std::size_t>(k)] = 50.0;
  const LstmWeights w{g.constant(Tensor({12, 2})), g.constant(Tensor({12, 3})),
                      g.constant(Tensor({12}, bias))};
  const Tensor c0 = Tensor::vector({0.3, -1.2, 2.5});
  auto [h, c] = lstm_step(w, g.constant(Tensor::vector({1, 1})), g.constant(Tensor::vector({0.1, 0.2, 0.3})),
                          g.constant(c0));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(c.value()[i], c0[i], 1e-12);
}

TEST(Lstm, MatchesScalarReference) {
  Rng rng = make_rng(5, "lstm-ref");
  const std::size_t n = 3, d = 4;
  const Tensor W_ih = random_tensor(rng, {4 * n, d});
  const Tensor W_hh = random_tensor(rng, {4 * n, n});
  const Tensor b = random_tensor(rng, {4 * n});
  const Tensor x = random_tensor(rng, {d});
  const Tensor h0 = random_tensor(rng, {n});
  const Tensor c0 = random_tensor(rng, {n});
  Graph g;
  auto [h, c] = lstm_step({g.constant(W_ih), g.constant(W_hh), g.constant(b)}, g.constant(x),
                          g.constant(h0), g.constant(c0));
  for (std::size_t u = 0; u < n; ++u) {
    double pre[4];
    for (std::size_t gate = 0; gate < 4; ++gate) {
      const std::size_t row = gate * n + u;
      double s = b[row];
      for (std::size_t j = 0; j < d; ++j) s += W_ih.at(row, j) * x[j];
      for (std::size_t j = 0; j < n; ++j) s += W_hh.at(row, j) * h0[j];
      pre[gate] = s;
    }
    const double i = sigmoid_ref(pre[0]), f = sigmoid_ref(pre[1]), gg = std::tanh(pre[2]),
                 o = sigmoid_ref(pre[3]);
    const double c_ref = f * c0[u] + i * gg;
    EXPECT_NEAR(c.value()[u], c_ref, 1e-14);
    EXPECT_NEAR(h.value()[u], o * std::tanh(c_ref), 1e-14);
  }
}

TEST(Backward, SumGradient) {
  Graph g;
  Var x = g.leaf(Tensor::vector({1, 2, 3, 4, 5}), true);
  g.backward(sum(x));
  const Tensor gx = g.grad(x);
  for (double v : gx.data()) EXPECT_EQ(v, 1.0);
}

TEST(Backward, QuadraticGradient) {
  Graph g;
  const Tensor xv = Tensor::vector({1.5, -2, 0.25});
  Var x = g.leaf(xv, true);
  g.backward(dot(x, x));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(g.grad(x)[i], 2 * xv[i]);
}

TEST(Backward, NonScalarRootIsContractError) {
  Graph g;
  Var x = g.leaf(Tensor::vector({1, 2}), true);
  EXPECT_THROW(g.backward(x), ContractError);
}

TEST(Backward, UnreachedLeafHasZeroGradient) {
  Graph g;
  Var x = g.leaf(Tensor::vector({1, 2}), true);
  Var y = g.leaf(Tensor::vector({3, 4, 5}), true);
  g.backward(sum(x));
  EXPECT_EQ(g.grad(y).shape(), y.shape());
  const Tensor gy = g.grad(y);
  for (double v : gy.data()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, RepeatedBackwardDoesNotAccumulate) {
  Graph g;
  Var x = g.leaf(Tensor::vector({1, 2}), true);
  Var root = dot(x, x);
  g.backward(root);
  g.backward(root);
  EXPECT_EQ(g.grad(x)[1], 4.0);
}

TEST(Backward, ReplayIsBitIdentical) {
  auto run = [] {
    Rng rng = make_rng(3, "replay");
    Graph g;
    Var W = g.leaf(random_tensor(rng, {4, 3}), true);
    Var x = g.leaf(random_tensor(rng, {3}), true);
    Var y = sum(tanh(affine(W, x)));
    g.backward(y);
    return std::pair{y.value(), g.grad(W)};
  };
  const auto a = run();
  const auto b = run();
  EXPECT_TRUE(a.first.identical(b.first));
  EXPECT_TRUE(a.second.identical(b.second));
}

TEST(GradCheck, InnerProduct) {
  Rng rng = make_rng(1, "gc-dot");
  const std::vector<Tensor> theta = {random_tensor(rng, {7})};
  const auto r = grad_check([](Graph&, std::span<const Var> p) { return dot(p[0], p[0]); }, theta);
  EXPECT_LE(r.max_rel_error, 1e-9);
}

TEST(GradCheck, SoftmaxCrossEntropyOfAffine) {
  Rng rng = make_rng(2, "gc-xent");
  const Tensor x = random_tensor(rng, {5});
  const std::vector<Tensor> theta = {random_tensor(rng, {4, 5})};
  const auto r = grad_check(
      [x](Graph& g, std::span<const Var> p) {
        return scale(pick(log_softmax_flat(affine(p[0], g.constant(x))), 2), -1.0);
      },
      theta);
  EXPECT_LE(r.max_rel_error, 1e-6);
}

TEST(GradCheck, NonFiniteObjectiveIsNumericError) {
  const std::vector<Tensor> theta = {Tensor::vector({-1.0})};
  EXPECT_THROW(grad_check([](Graph&, std::span<const Var> p) { return sum(log_eps(p[0], 0.0)); }, theta),
               NumericError);
}

// Every differentiable op on 20 seeded instances.
struct OpCase {
  const char* name;
  std::vector<Shape> shapes;
  std::function<Var(Graph&, std::span<const Var>)> f;
};

class OpGradients : public ::testing::TestWithParam<int> {};

TEST_P(OpGradients, MatchFiniteDifferences) {
  const std::vector<OpCase> cases = {
      {"affine", {{3, 4}, {4}, {3}}, [](Graph&, auto p) { return sum(tanh(affine(p[0], p[1], p[2]))); }},
      {"project_rows", {{5, 3}, {2, 3}, {2}},
       [](Graph&, auto p) { return sum(sigmoid(add_row_bias(project_rows(p[0], p[1]), p[2]))); }},
      {"mul_sub_add", {{6}, {6}}, [](Graph&, auto p) { return dot(mul(p[0], p[1]), add(sub(p[0], p[1]), p[0])); }},
      {"exp", {{4}}, [](Graph&, auto p) { return sum(exp(p[0])); }},
      {"log_eps", {{4}}, [](Graph&, auto p) { return sum(log_eps(mul(p[0], p[0]), 0.5)); }},
      {"softmax", {{5}, {5}}, [](Graph&, auto p) { return dot(softmax_flat(p[0]), p[1]); }},
      {"log_softmax", {{5}}, [](Graph&, auto p) { return pick(log_softmax_flat(p[0]), 1); }},
      {"normalize_rows", {{4, 3}, {4, 3}},
       [](Graph&, auto p) { return dot(reshape(normalize_rows(p[0], 1e-8), {12}), reshape(p[1], {12})); }},
      {"scale_rows", {{4}, {4, 3}}, [](Graph&, auto p) { return sum(tanh(scale_rows(p[0], p[1]))); }},
      {"scale_by", {{3}, {2}}, [](Graph&, auto p) { return sum(tanh(scale_by(p[0], p[1], 1))); }},
      {"slice_concat", {{5}, {2}},
       [](Graph&, auto p) {
         const std::array<Var, 2> parts = {slice(p[0], 1, 3), p[1]};
         Var c = concat(parts);
         return dot(c, c);
       }},
      {"lstm", {{8, 3}, {8, 2}, {8}, {3}, {2}, {2}},
       [](Graph&, auto p) {
         auto [h, c] = lstm_step({p[0], p[1], p[2]}, p[3], p[4], p[5]);
         return add(sum(h), dot(c, c));
       }},
  };
  Rng rng = make_rng(static_cast<std::uint64_t>(GetParam()), "op-gradients");
  for (const OpCase& oc : cases) {
    std::vector<Tensor> theta;
    for (const Shape& s : oc.shapes) theta.push_back(random_tensor(rng, s));
    const auto r = grad_check([&](Graph& g, std::span<const Var> p) { return oc.f(g, p); }, theta);
    EXPECT_LE(r.max_rel_error, 1e-6) << oc.name;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, OpGradients, ::testing::Range(0, 20));

TEST(NormalizeRows, ZeroRowStaysFinite) {
  Graph g;
  Var x = g.leaf(Tensor({2, 3}, std::vector<double>{0, 0, 0, 3, 4, 0}), true);
  Var y = normalize_rows(x, 1e-8);
  EXPECT_EQ(y.value().at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(y.value().at(1, 0), 0.6);
  g.backward(sum(y));
  EXPECT_TRUE(g.grad(x).all_finite());
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng = make_rng(9, "ckpt");
  std::vector<NamedTensor> recs = {{"a.W", round_to_float(random_tensor(rng, {3, 4}))},
                                   {"b", round_to_float(random_tensor(rng, {5}))},
                                   {"meta.x", Tensor::scalar(7)}};
  std::stringstream buf;
  write_named_tensors(buf, recs);
  const auto back = read_named_tensors(buf);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].name, recs[i].name);
    EXPECT_TRUE(back[i].tensor.identical(recs[i].tensor));
  }
}

TEST(Checkpoint, HeaderLayout) {
  std::stringstream buf;
  const std::vector<NamedTensor> recs = {{"w", Tensor::vector({1.0, -2.0})}};
  write_named_tensors(buf, recs);
  const std::string bytes = buf.str();
  // magic, u16 version, u32 count, u16 len, "w", u8 rank, u32 dim, 2 x f32
  ASSERT_EQ(bytes.size(), 4u + 2 + 4 + 2 + 1 + 1 + 4 + 8);
  EXPECT_EQ(bytes.substr(0, 4), "ATNV");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 1);
  EXPECT_EQ(bytes[12], 'w');
  EXPECT_EQ(bytes[13], 1);
  EXPECT_EQ(bytes[14], 2);
  float second;
  std::memcpy(&second, bytes.data() + 22, 4);
  EXPECT_EQ(second, -2.0f);
}

TEST(Checkpoint, BadMagicIsFormatError) {
  std::stringstream buf("XXXX\x01\x00");
  EXPECT_THROW(read_named_tensors(buf), FormatError);
}

TEST(Checkpoint, TruncatedIsFormatError) {
  std::stringstream full;
  const std::vector<NamedTensor> recs = {{"w", Tensor::vector({1.0, -2.0})}};
  write_named_tensors(full, recs);
  std::stringstream cut(full.str().substr(0, 20));
  EXPECT_THROW(read_named_tensors(cut), FormatError);
}

TEST(Checkpoint, MissingFile) {
  EXPECT_THROW(load_named_tensors("/nonexistent/dir/x.atnv"), std::runtime_error);
}
