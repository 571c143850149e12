// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "dmat/autodiff.hpp"
#include "dmat/errors.hpp"
#include "dmat/gradcheck.hpp"
#include "dmat/parameter.hpp"
#include "helpers.hpp"

using namespace dmat;
using namespace dmat::ad;

TEST_CASE("tensor construction checks the element count") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  CHECK_THROWS_AS(Tensor({}, {}), DimensionError);
  CHECK(Tensor::zeros({2, 3}).size() == 6);
}

TEST_CASE("forward values of the basic ops") {
  Graph g;
  SUBCASE("softmax of equal logits is uniform") {
    const auto y = softmax(g.constant(Tensor({1, 2}, {0.0, 0.0})));
    CHECK(y.value().data == std::vector<double>{0.5, 0.5});
  }
  SUBCASE("relu clamps negatives") {
    const auto y = relu(g.constant(Tensor({1, 2}, {-1.0, 2.0})));
    CHECK(y.value().data == std::vector<double>{0.0, 2.0});
  }
  SUBCASE("matmul by the identity") {
    const auto a = g.constant(Tensor({2, 2}, {1, 2, 3, 4}));
    const auto i = g.constant(Tensor({2, 2}, {1, 0, 0, 1}));
    CHECK(matmul(a, i).value().data == std::vector<double>{1, 2, 3, 4});
  }
  SUBCASE("row broadcast for add and sub") {
    const auto a = g.constant(Tensor({2, 2}, {1, 2, 3, 4}));
    const auto b = g.constant(Tensor({2}, {10, 20}));
    CHECK(add(a, b).value().data == std::vector<double>{11, 22, 13, 24});
    CHECK(sub(a, b).value().data == std::vector<double>{-9, -18, -7, -16});
  }
  SUBCASE("log_softmax matches log of softmax and survives large logits") {
    const auto x = g.constant(Tensor({1, 3}, {1000.0, 1001.0, 1002.0}));
    const auto ls = log_softmax(x).value();
    const auto s = softmax(x).value();
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::isfinite(ls.data[j]));
      CHECK(ls.data[j] == doctest::Approx(std::log(s.data[j])).epsilon(1e-12));
    }
  }
  SUBCASE("concat, pick, transpose") {
    const auto a = g.constant(Tensor({1, 2}, {1, 2}));
    const auto b = g.constant(Tensor({2, 2}, {3, 4, 5, 6}));
    const auto c = concat_rows({a, b});
    CHECK(c.shape() == Shape{3, 2});
    CHECK(c.value().data == std::vector<double>{1, 2, 3, 4, 5, 6});
    CHECK(pick(c, {1, 0, 1}).value().data == std::vector<double>{2, 3, 6});
    CHECK(transpose(b).value().data == std::vector<double>{3, 5, 4, 6});
  }
}

TEST_CASE("shape errors name the op and both shapes") {
  Graph g;
  const auto a = g.constant(Tensor::zeros({2, 3}));
  const auto b = g.constant(Tensor::zeros({2, 3}));
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2, 3]") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, g.constant(Tensor::zeros({3, 2}))), DimensionError);
  CHECK_THROWS_AS(concat_rows({a, g.constant(Tensor::zeros({1, 2}))}), DimensionError);
  CHECK_THROWS_AS(pick(a, {0}), DimensionError);
}

TEST_CASE("empty rows and empty reductions are domain errors") {
  Graph g;
  const auto e = g.constant(Tensor::zeros({2, 0}));
  CHECK_THROWS_AS(log_softmax(e), DomainError);
  CHECK_THROWS_AS(softmax(e), DomainError);
  CHECK_THROWS_AS(mean(e), DomainError);
}

TEST_CASE("backward examples") {
  SUBCASE("sum gives ones") {
    Parameter x("x", Tensor({3}, {1, 2, 3}));
    Graph g;
    const auto grads = g.backward(sum(g.parameter(x)));
    CHECK(grads.of(x) == std::vector<double>{1, 1, 1});
  }
  SUBCASE("mean of relu uses a zero subgradient on masked entries") {
    Parameter x("x", Tensor({2}, {-1.0, 2.0}));
    Graph g;
    const auto grads = g.backward(mean(relu(g.parameter(x))));
    CHECK(grads.of(x) == std::vector<double>{0.0, 0.5});
  }
  SUBCASE("relu at exactly zero has zero gradient") {
    Parameter x("x", Tensor({2}, {0.0, 1.0}));
    Graph g;
    CHECK(g.backward(sum(relu(g.parameter(x)))).of(x) == std::vector<double>{0.0, 1.0});
  }
  SUBCASE("fan-out accumulates by summation") {
    Parameter x("x", Tensor({2}, {1.0, -3.0}));
    Graph g;
    const auto v = g.parameter(x);
    CHECK(g.parameter(x).id() == v.id());
    const auto grads = g.backward(sum(add(scalar_mul(v, 2.0), abs(v))));
    CHECK(grads.of(x) == std::vector<double>{3.0, 1.0});
  }
  SUBCASE("unreachable nodes get zeros") {
    Parameter x("x", Tensor({2}, {1.0, 2.0}));
    Parameter y("y", Tensor({2}, {1.0, 2.0}));
    Graph g;
    g.parameter(y);
    const auto grads = g.backward(sum(g.parameter(x)));
    CHECK(grads.of(y) == std::vector<double>{0.0, 0.0});
    Parameter unregistered("z", Tensor({3}, {1, 2, 3}));
    CHECK(grads.of(unregistered) == std::vector<double>{0.0, 0.0, 0.0});
  }
  SUBCASE("non-scalar loss is a contract error") {
    Graph g;
    const auto x = g.constant(Tensor::zeros({2}), true);
    CHECK_THROWS_AS(g.backward(x), ContractError);
  }
}

TEST_CASE("grad_reverse") {
  SUBCASE("forward is the identity") {
    Graph g;
    const auto x = g.constant(Tensor({2}, {1.0, 2.0}), true);
    const Tensor before = x.value();
    const Tensor after = grad_reverse(x, 0.5).value();
    CHECK(after == before);
  }
  SUBCASE("backward scales by minus lambda") {
    Parameter x("x", Tensor({2}, {1.0, 2.0}));
    Graph g;
    CHECK(g.backward(sum(grad_reverse(g.parameter(x), 0.5))).of(x) == std::vector<double>{-0.5, -0.5});
  }
  SUBCASE("lambda zero blocks the edge") {
    Parameter x("x", Tensor({2}, {1.0, 2.0}));
    Graph g;
    CHECK(g.backward(sum(grad_reverse(g.parameter(x), 0.0))).of(x) == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("negative lambda is rejected") {
    Graph g;
    CHECK_THROWS_AS(grad_reverse(g.constant(Tensor::zeros({1}), true), -0.1), ContractError);
  }
  SUBCASE("linearized surrogate matches the reversal slope") {
    Parameter x("x", Tensor({1}, {0.7}));
    Graph base;
    base.backward(sum(grad_reverse(base.parameter(x), 0.3)));
    Graph lin;
    lin.linearize_reversals(base.reversal_inputs());
    const auto y = grad_reverse(lin.parameter(x), 0.3);
    CHECK(y.item() == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(lin.backward(sum(y)).of(x)[0] == doctest::Approx(-0.3));
  }
}

TEST_CASE("softmax rows sum to one with entries in (0, 1)") {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    Graph g;
    const auto p = softmax(g.constant(testing::random_tensor(rng, {4, 5}, -8.0, 8.0))).value();
    for (std::size_t i = 0; i < 4; ++i) {
      double s = 0.0;
      for (double v : p.row(i)) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        s += v;
      }
      CHECK(std::fabs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("backward is bit-for-bit repeatable") {
  Rng rng(8);
  Parameter w("w", testing::random_tensor(rng, {3, 4}));
  const Tensor x = testing::random_tensor(rng, {5, 3});
  auto run = [&] {
    Graph g;
    const auto loss = mean(log_softmax(matmul(g.constant(x), g.parameter(w))));
    return g.backward(loss).of(w);
  };
  CHECK(run() == run());
}

TEST_CASE("primitive_forward dispatches by kind") {
  Graph g;
  const Var a = g.constant(Tensor({1, 2}, {-1.0, 2.0}));
  const Var in[] = {a};
  CHECK(primitive_forward(OpKind::kRelu, in).value().data == std::vector<double>{0.0, 2.0});
  CHECK(primitive_forward(OpKind::kScalarMul, in, 3.0).value().data == std::vector<double>{-3.0, 6.0});
  CHECK_THROWS_AS(primitive_forward(OpKind::kMatMul, in), ContractError);
}

TEST_CASE("finite-difference suite, reduced size") {
  for (const auto& e : gradcheck::run_suite(10, 77)) {
    INFO(e.name);
    CHECK(e.passed());
  }
}
