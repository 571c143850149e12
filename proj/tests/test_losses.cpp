// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dmat/errors.hpp"
#include "dmat/losses.hpp"
#include "dmat/model.hpp"
#include "helpers.hpp"

using namespace dmat;
using namespace dmat::ad;

namespace {

double ce_oracle(const Tensor& logits, const std::vector<std::size_t>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    double z = 0.0;
    for (double v : logits.row(i)) z += std::exp(v);
    total += -std::log(std::exp(logits.at(i, labels[i])) / z);
  }
  return total / static_cast<double>(logits.rows());
}

double dis_oracle(const Tensor& a, const Tensor& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::fabs(a.data[i] - b.data[i]);
  return total / static_cast<double>(a.size());
}

nn::Architecture small_arch() {
  nn::Architecture a;
  a.g_hidden = {6};
  a.feature_dim = 4;
  a.d_hidden = {5};
  a.c_hidden = {5};
  a.num_classes = 3;
  return a;
}

void zero(nn::LayerStack& s) {
  for (Parameter* p : s.parameters()) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
}

}  // namespace

TEST_CASE("cross_entropy examples") {
  Graph g;
  const std::vector<std::size_t> zero_label{0};
  CHECK(losses::cross_entropy(g.constant(Tensor({1, 2}, {0, 0})), zero_label).item() ==
        doctest::Approx(std::numbers::ln2).epsilon(1e-15));
  CHECK(losses::cross_entropy(g.constant(Tensor({1, 2}, {1000, 0})), zero_label).item() ==
        doctest::Approx(0.0));

  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const Tensor logits = testing::random_tensor(rng, {6, 4}, -3.0, 3.0);
    std::vector<std::size_t> y(6);
    for (auto& v : y) v = rng.below(4);
    const double got = losses::cross_entropy(g.constant(logits), y).item();
    CHECK(std::fabs(got - ce_oracle(logits, y)) <= 1e-10);
    CHECK(got >= 0.0);
  }
}

TEST_CASE("cross_entropy errors") {
  Graph g;
  const std::vector<std::size_t> bad{2};
  CHECK_THROWS_AS(losses::cross_entropy(g.constant(Tensor({1, 2}, {0, 0})), bad), ContractError);
  const std::vector<std::size_t> two{0, 1};
  CHECK_THROWS_AS(losses::cross_entropy(g.constant(Tensor({1, 2}, {0, 0})), two), DimensionError);
  CHECK_THROWS_AS(losses::cross_entropy(g.constant(Tensor::zeros({0, 2})), {}), ContractError);
}

TEST_CASE("discrepancy examples and properties") {
  Graph g;
  const auto p = g.constant(Tensor({1, 2}, {0.6, 0.4}));
  const auto q = g.constant(Tensor({1, 2}, {0.2, 0.8}));
  CHECK(losses::discrepancy(p, p).item() == 0.0);
  CHECK(losses::discrepancy(p, q).item() == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(losses::discrepancy(g.constant(Tensor({1, 2}, {1, 0})), g.constant(Tensor({1, 2}, {0, 1}))).item() ==
        1.0);
  CHECK_THROWS_AS(losses::discrepancy(p, g.constant(Tensor::zeros({2, 2}))), DimensionError);

  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + rng.below(6);
    const auto a = g.constant(testing::random_probs(rng, 3, k));
    const auto b = g.constant(testing::random_probs(rng, 3, k));
    const double ab = losses::discrepancy(a, b).item();
    CHECK(ab == losses::discrepancy(b, a).item());
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(ab > 0.0);
  }
}

TEST_CASE("loss_m1 composition and gradient reversal") {
  Rng rng(3);
  auto m1 = nn::build_component_set(small_arch(), 5, "m1");
  const Tensor xs = testing::random_tensor(rng, {4, 2}), xt = testing::random_tensor(rng, {4, 2});
  const std::vector<std::size_t> ys{0, 1, 2, 1};

  SUBCASE("value equals the sum of independently computed parts") {
    Graph g;
    const auto l = losses::loss_m1(g, xs, ys, xt, m1, 0.7);
    Graph o;
    const auto s = model::forward_path(o, m1, o.constant(xs));
    const auto t = model::forward_path(o, m1, o.constant(xt));
    const double expected = ce_oracle(s.ca_logits.value(), ys) + ce_oracle(s.cb_logits.value(), ys) +
                            ce_oracle(s.d_logits.value(), {0, 0, 0, 0}) +
                            ce_oracle(t.d_logits.value(), {1, 1, 1, 1});
    CHECK(l.total.item() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(l.classifier.item() + l.domain_source.item() + l.domain_target.item() ==
          doctest::Approx(l.total.item()).epsilon(1e-14));
  }
  SUBCASE("lambda zero leaves only the classifier gradient on G") {
    Graph g;
    const auto l = losses::loss_m1(g, xs, ys, xt, m1, 0.0);
    const auto full = g.backward(l.total);
    Graph c;
    const auto lc = losses::loss_m1(c, xs, ys, xt, m1, 0.0);
    const auto cls = c.backward(lc.classifier);
    for (Parameter* p : m1.parameters({nn::Component::kG, nn::Component::kT})) {
      const auto a = full.of(*p), b = cls.of(*p);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
  }
  SUBCASE("domain gradient on G is the negated plain one") {
    Graph r;
    const auto lr = losses::loss_m1(r, xs, ys, xt, m1, 1.0);
    const auto dr = r.backward(add(lr.domain_source, lr.domain_target));
    Graph p;
    const auto lp = losses::loss_m2(p, xs, ys, xt, m1);
    const auto dp = p.backward(add(lp.domain_source, lp.domain_target));
    for (Parameter* q : m1.parameters({nn::Component::kG})) {
      const auto a = dr.of(*q), b = dp.of(*q);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(-b[i]).epsilon(1e-12));
    }
    for (Parameter* q : m1.parameters({nn::Component::kD})) CHECK(dr.of(*q) == dp.of(*q));
  }
  SUBCASE("identical source and target at a zero discriminator") {
    zero(m1.D);
    Graph g;
    const auto l = losses::loss_m1(g, xs, ys, xs, m1, 0.0);
    CHECK(l.domain_source.item() == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
    CHECK(l.domain_target.item() == doctest::Approx(std::numbers::ln2).epsilon(1e-15));
    // Averaged over the concatenated batch the domain term is ln 2 as well.
    CHECK((l.domain_source.item() + l.domain_target.item()) / 2 == doctest::Approx(std::numbers::ln2));
  }
  SUBCASE("empty batch") {
    Graph g;
    CHECK_THROWS_AS(losses::loss_m1(g, Tensor::zeros({0, 2}), {}, xt, m1, 0.5), ContractError);
  }
}

TEST_CASE("loss_m2 has no reversal") {
  Rng rng(4);
  auto m2 = nn::build_component_set(small_arch(), 6, "m2");
  const Tensor xs = testing::random_tensor(rng, {4, 2}), xt = testing::random_tensor(rng, {4, 2}, 0.5, 2.0);
  const std::vector<std::size_t> ys{0, 1, 2, 1};
  Graph g;
  const auto l = losses::loss_m2(g, xs, ys, xt, m2);
  const auto dom = g.backward(add(l.domain_source, l.domain_target));
  double norm = 0.0;
  for (Parameter* p : m2.parameters({nn::Component::kG}))
    for (double v : dom.of(*p)) norm += std::fabs(v);
  CHECK(norm > 0.0);

  Graph a, b;
  auto same = m2;
  CHECK(losses::loss_m1(a, xs, ys, xt, same, 0.0).classifier.item() ==
        losses::loss_m2(b, xs, ys, xt, m2).classifier.item());
}

TEST_CASE("loss_dual") {
  Rng rng(5);
  const Tensor xs = testing::random_tensor(rng, {4, 2}), xt = testing::random_tensor(rng, {3, 2});
  SUBCASE("identical modules give zero loss and zero gradients") {
    auto m1 = nn::build_component_set(small_arch(), 7, "m");
    auto m2 = nn::build_component_set(small_arch(), 7, "m");
    Graph g;
    const auto l = losses::loss_dual(g, xs, xt, m1, m2, 0.8);
    CHECK(l.total.item() == 0.0);
    const auto grads = g.backward(l.total);
    for (auto* set : {&m1, &m2})
      for (Parameter* p : set->parameters())
        for (double v : grads.of(*p)) CHECK(v == 0.0);
  }
  SUBCASE("value matches the discrepancy oracle on extracted outputs") {
    auto m1 = nn::build_component_set(small_arch(), 8, "m1");
    auto m2 = nn::build_component_set(small_arch(), 9, "m2");
    Graph g;
    const auto l = losses::loss_dual(g, xs, xt, m1, m2, 0.3);
    Graph o;
    const auto s1 = model::forward_path(o, m1, o.constant(xs));
    const auto s2 = model::forward_path(o, m2, o.constant(xs));
    const auto t1 = model::forward_path(o, m1, o.constant(xt));
    const auto t2 = model::forward_path(o, m2, o.constant(xt));
    const double dis_t = dis_oracle(softmax(s1.t_out).value(), softmax(s2.t_out).value()) +
                         dis_oracle(softmax(t1.t_out).value(), softmax(t2.t_out).value());
    const double dis_c = dis_oracle(s1.ca_probs.value(), s2.ca_probs.value()) +
                         dis_oracle(t1.ca_probs.value(), t2.ca_probs.value());
    CHECK(l.dis_t.item() == doctest::Approx(dis_t).epsilon(1e-12));
    CHECK(l.dis_c.item() == doctest::Approx(dis_c).epsilon(1e-12));
    CHECK(l.total.item() == doctest::Approx(dis_t + dis_c).epsilon(1e-12));
  }
  SUBCASE("parameters feeding only dis_t see a sign flip") {
    auto m1 = nn::build_component_set(small_arch(), 10, "m1");
    auto m2 = nn::build_component_set(small_arch(), 11, "m2");
    Graph g;
    const auto l = losses::loss_dual(g, xs, xt, m1, m2, 1.0);
    const auto rev = g.backward(l.total);
    const auto plain = g.backward(add(l.dis_t, l.dis_c));
    // C1 sees only dis_c, so it must agree; the dis_t part of T1's gradient flips.
    for (Parameter* p : m1.parameters({nn::Component::kCa})) CHECK(rev.of(*p) == plain.of(*p));
    const auto only_t = g.backward(l.dis_t);
    const auto only_c = g.backward(l.dis_c);
    for (Parameter* p : m1.parameters({nn::Component::kT})) {
      const auto r = rev.of(*p), t = only_t.of(*p), c = only_c.of(*p);
      for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i] == doctest::Approx(c[i] - t[i]).epsilon(1e-12));
    }
  }
}
