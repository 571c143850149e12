// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>

#include "audit.hpp"
#include "dmat/errors.hpp"
#include "dmat/model.hpp"
#include "helpers.hpp"

using namespace dmat;
using namespace dmat::model;

TEST_CASE("variant names round-trip exactly") {
  for (Variant v : kAllVariants) CHECK(parse_variant(variant_name(v)) == v);
  CHECK(!parse_variant("DANN"));
  CHECK(!parse_variant("ours-2m"));
  CHECK(variant_name(Variant::kOurs2M) == "ours_2m");
}

TEST_CASE("variant plans") {
  const auto dann = variant_plan(Variant::kDann);
  CHECK((!dann.step1_m1 && !dann.step1_m2 && !dann.step3 && dann.step2_m1 && !dann.step2_m2));
  const auto full = variant_plan(Variant::kOurs2M);
  CHECK((full.step1_m1 && full.step1_m2 && full.step2_m1 && full.step2_m2 && full.step3));
  const auto so = variant_plan(Variant::kSourceOnly);
  CHECK(!so.uses_target());
  CHECK(!so.uses_m2());
  CHECK(variant_plan(Variant::kOurs1M).step1_m1);
  CHECK(!variant_plan(Variant::kOurs1M).step1_m2);
  CHECK(!variant_plan(Variant::kMcdDann).uses_m2());
  CHECK(variant_plan(Variant::kOurs).uses_m2());
  CHECK(!variant_plan(Variant::kOurs).step1_m1);
  CHECK(full.updates_per_batch(4) == 6 + 6 + 1 + 1);
  CHECK(so.updates_per_batch(4) == 1);

  CHECK(updated_components(dann) == std::set<std::string>{"m1.G", "m1.T", "m1.D", "m1.Ca", "m1.Cb"});
  CHECK(updated_components(variant_plan(Variant::kMcd)) == std::set<std::string>{"m1.G", "m1.T", "m1.Ca", "m1.Cb"});
  CHECK(updated_components(full).size() == 10);
}

TEST_CASE("forward_path shapes and determinism") {
  nn::Architecture arch;
  arch.num_classes = 3;
  const auto set = nn::build_component_set(arch, 1, "m1");
  Rng rng(2);
  const Tensor x = testing::random_tensor(rng, {5, 2});
  ad::Graph g;
  const auto out = forward_path(g, set, g.constant(x));
  CHECK(out.features.shape() == Shape{5, 32});
  CHECK(out.t_out.shape() == Shape{5, 32});
  CHECK(out.ca_probs.shape() == Shape{5, 3});
  CHECK(out.cb_probs.shape() == Shape{5, 3});
  CHECK(out.d_logits.shape() == Shape{5, 2});
  ad::Graph h;
  CHECK(forward_path(h, set, h.constant(x)).ca_probs.value() == out.ca_probs.value());
  CHECK_THROWS_AS(forward_path(h, set, h.constant(Tensor::zeros({5, 3}))), DimensionError);

  auto zeroed = set;
  for (Parameter* p : zeroed.Ca.parameters()) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
  ad::Graph z;
  for (double v : forward_path(z, zeroed, z.constant(x)).ca_probs.value().data)
    CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("dual model structure") {
  const auto m = build_dual_model(nn::Architecture{}, 3);
  std::set<ParamId> ids;
  for (const Parameter* p : m.m1.parameters()) ids.insert(p->id);
  for (const Parameter* p : m.m2.parameters()) CHECK(!ids.contains(p->id));
  const auto a = m.m1.parameters(), b = m.m2.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->value.shape == b[i]->value.shape);
    CHECK(a[i]->name.substr(2) == b[i]->name.substr(2));
  }
  CHECK(m.m1.G.layers[0].weight.value != m.m2.G.layers[0].weight.value);
}

TEST_CASE("predict uses only G1, T1 and C1") {
  auto m = build_dual_model(nn::Architecture{}, 4);
  Rng rng(5);
  const Tensor x = testing::random_tensor(rng, {50, 2}, -2.0, 2.0);
  const auto before = predict_proba(m, x);
  testing::scramble_off_path(m, 6);
  CHECK(predict_proba(m, x) == before);

  for (Parameter* p : m.m1.Ca.parameters()) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
  for (std::size_t y : predict(m, x)) CHECK(y == 0);
}
