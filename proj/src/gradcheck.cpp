// SPDX-License-Identifier: Apache-2.0
#include "dmat/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "dmat/losses.hpp"
#include "dmat/model.hpp"
#include "dmat/nn.hpp"
#include "dmat/rng.hpp"

namespace dmat::gradcheck {

namespace {

// Signs of every relu/abs input; a change between stencil points means the
// difference quotient straddles a kink.
std::vector<signed char> kink_signature(const ad::Graph& g) {
  std::vector<signed char> sig;
  for (ad::NodeId id = 0; id < g.size(); ++id) {
    const auto kind = g.kind(id);
    if (kind != ad::OpKind::kRelu && kind != ad::OpKind::kAbs) continue;
    for (double v : g.value(g.inputs(id)[0]).data) sig.push_back(static_cast<signed char>((v > 0) - (v < 0)));
  }
  return sig;
}

struct Probe {
  double value;
  std::vector<signed char> signature;
};

Probe evaluate(const LossFn& loss, const std::vector<Tensor>& anchors) {
  ad::Graph g;
  g.linearize_reversals(anchors);
  const ad::Var l = loss(g);
  return {l.item(), kink_signature(g)};
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), kFloor});
}

CaseResult check_case(const LossFn& loss, std::span<Parameter* const> params, double h) {
  ad::Graph base;
  const ad::Var l = loss(base);
  const auto grads = base.backward(l);
  const std::vector<Tensor> anchors = base.reversal_inputs();
  const auto base_sig = evaluate(loss, anchors).signature;

  CaseResult result;
  for (Parameter* p : params) {
    const auto analytic = grads.of(*p);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value.data[i];
      p->value.data[i] = saved + h;
      const Probe up = evaluate(loss, anchors);
      p->value.data[i] = saved - h;
      const Probe down = evaluate(loss, anchors);
      p->value.data[i] = saved;
      if (up.signature != base_sig || down.signature != base_sig) {
        ++result.skipped;
        continue;
      }
      const double numeric = (up.value - down.value) / (2.0 * h);
      result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic[i], numeric));
      ++result.checked;
    }
  }
  return result;
}

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -2.0, double hi = 2.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Reduces any 2-D output to a scalar through a fixed random projection so
// that upstream gradients are not uniform (uniform ones hide softmax bugs).
ad::Var project(ad::Graph& g, ad::Var out, const Tensor& weights) {
  if (out.shape().size() == 1) return ad::sum(out);
  return ad::sum(ad::matmul(out, g.constant(weights)));
}

class Suite {
 public:
  Suite(std::size_t trials, std::uint64_t seed) : trials_(trials), rng_(seed) {}

  // Checks `op` on fresh random inputs of the given shapes, both plain and
  // with its first operand passed through grad_reverse.
  void unary_or_binary(const std::string& name, std::vector<Shape> shapes, Shape out_shape,
                       const std::function<ad::Var(std::span<const ad::Var>)>& op,
                       bool with_reversal = true) {
    run(name, [&](SuiteEntry& e) { one(e, shapes, out_shape, op, std::nullopt); });
    if (with_reversal)
      run("grad_reverse+" + name, [&](SuiteEntry& e) {
        one(e, shapes, out_shape, op, rng_.uniform(0.0, 1.5));
      });
  }

  void run(const std::string& name, const std::function<void(SuiteEntry&)>& body) {
    SuiteEntry e;
    e.name = name;
    for (std::size_t t = 0; t < trials_; ++t) body(e);
    entries_.push_back(e);
  }

  void record(SuiteEntry& e, const CaseResult& r) {
    ++e.cases;
    e.checked += r.checked;
    e.skipped += r.skipped;
    e.max_rel_error = std::max(e.max_rel_error, r.max_rel_error);
  }

  Rng& rng() { return rng_; }
  std::vector<SuiteEntry> take() { return std::move(entries_); }

 private:
  void one(SuiteEntry& e, const std::vector<Shape>& shapes, const Shape& out_shape,
           const std::function<ad::Var(std::span<const ad::Var>)>& op,
           std::optional<double> reversal) {
    std::vector<Parameter> inputs;
    for (const Shape& s : shapes) inputs.emplace_back("x", random_tensor(rng_, s));
    const Tensor weights =
        random_tensor(rng_, {out_shape.back(), 1}, -1.0, 1.0);
    std::vector<Parameter*> ptrs;
    for (auto& p : inputs) ptrs.push_back(&p);
    auto loss = [&](ad::Graph& g) {
      std::vector<ad::Var> vars;
      for (auto& p : inputs) vars.push_back(g.parameter(p));
      if (reversal) vars[0] = ad::grad_reverse(vars[0], *reversal);
      return project(g, op(vars), weights);
    };
    record(e, check_case(loss, ptrs));
  }

  std::size_t trials_;
  Rng rng_;
  std::vector<SuiteEntry> entries_;
};

nn::Architecture tiny_arch(std::size_t classes) {
  nn::Architecture a;
  a.input_dim = 3;
  a.g_hidden = {4};
  a.feature_dim = 3;
  a.d_hidden = {3};
  a.c_hidden = {3};
  a.num_classes = classes;
  return a;
}

// Uniform values keep every unit off its kink with high probability while
// exercising both relu branches.
void randomize(nn::ComponentSet& set, Rng& rng) {
  for (Parameter* p : set.parameters())
    for (double& v : p->value.data) v = rng.uniform(-1.0, 1.0);
}

std::vector<std::size_t> random_labels(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> y(n);
  for (auto& v : y) v = static_cast<std::size_t>(rng.below(k));
  return y;
}

}  // namespace

std::vector<SuiteEntry> run_suite(std::size_t trials, std::uint64_t seed) {
  Suite s(trials, seed);
  using Vars = std::span<const ad::Var>;

  s.unary_or_binary("matmul", {{3, 4}, {4, 2}}, {3, 2}, [](Vars v) { return ad::matmul(v[0], v[1]); });
  s.unary_or_binary("transpose", {{3, 4}}, {4, 3}, [](Vars v) { return ad::transpose(v[0]); });
  s.unary_or_binary("add", {{3, 4}, {3, 4}}, {3, 4}, [](Vars v) { return ad::add(v[0], v[1]); });
  s.unary_or_binary("add_broadcast", {{3, 4}, {4}}, {3, 4}, [](Vars v) { return ad::add(v[0], v[1]); });
  s.unary_or_binary("sub", {{3, 4}, {3, 4}}, {3, 4}, [](Vars v) { return ad::sub(v[0], v[1]); });
  s.unary_or_binary("sub_broadcast", {{3, 4}, {4}}, {3, 4}, [](Vars v) { return ad::sub(v[0], v[1]); });
  s.unary_or_binary("scalar_mul", {{3, 4}}, {3, 4}, [](Vars v) { return ad::scalar_mul(v[0], -1.7); });
  s.unary_or_binary("relu", {{3, 4}}, {3, 4}, [](Vars v) { return ad::relu(v[0]); });
  s.unary_or_binary("softmax", {{3, 4}}, {3, 4}, [](Vars v) { return ad::softmax(v[0]); });
  s.unary_or_binary("log_softmax", {{3, 4}}, {3, 4}, [](Vars v) { return ad::log_softmax(v[0]); });
  s.unary_or_binary("mean", {{3, 4}}, {1}, [](Vars v) { return ad::mean(v[0]); });
  s.unary_or_binary("sum", {{3, 4}}, {1}, [](Vars v) { return ad::sum(v[0]); });
  s.unary_or_binary("abs", {{3, 4}}, {3, 4}, [](Vars v) { return ad::abs(v[0]); });
  s.unary_or_binary("concat_rows", {{2, 3}, {3, 3}}, {5, 3},
                    [](Vars v) { return ad::concat_rows({v[0], v[1]}); });
  s.unary_or_binary("pick", {{4, 3}}, {4},
                    [](Vars v) { return ad::pick(v[0], {2, 0, 1, 2}); });

  auto& rng = s.rng();
  s.run("cross_entropy", [&](SuiteEntry& e) {
    Parameter logits("logits", random_tensor(rng, {5, 4}));
    const auto labels = random_labels(rng, 5, 4);
    Parameter* ps[] = {&logits};
    s.record(e, check_case([&](ad::Graph& g) { return losses::cross_entropy(g.parameter(logits), labels); }, ps));
  });
  s.run("discrepancy", [&](SuiteEntry& e) {
    Parameter a("a", random_tensor(rng, {5, 3})), b("b", random_tensor(rng, {5, 3}));
    Parameter* ps[] = {&a, &b};
    s.record(e, check_case([&](ad::Graph& g) {
      return losses::discrepancy(ad::softmax(g.parameter(a)), ad::softmax(g.parameter(b)));
    }, ps));
  });
  s.run("forward_stack", [&](SuiteEntry& e) {
    auto stack = nn::init_params({{3, 4, 2}, nn::OutputActivation::kSoftmax}, rng.below(1u << 30));
    for (Parameter* p : stack.parameters())
      for (double& v : p->value.data) v = rng.uniform(-1.0, 1.0);
    const Tensor x = random_tensor(rng, {4, 3});
    const Tensor w = random_tensor(rng, {2, 1}, -1.0, 1.0);
    const auto ps = stack.parameters();
    s.record(e, check_case([&](ad::Graph& g) {
      return project(g, nn::forward_stack(g, stack, g.constant(x)), w);
    }, ps));
  });
  s.run("loss_m1", [&](SuiteEntry& e) {
    auto set = nn::build_component_set(tiny_arch(3), rng.below(1u << 30), "m1");
    randomize(set, rng);
    const Tensor xs = random_tensor(rng, {4, 3}), xt = random_tensor(rng, {4, 3});
    const auto ys = random_labels(rng, 4, 3);
    const double lambda = rng.uniform(0.0, 1.0);
    const auto ps = set.parameters();
    s.record(e, check_case([&](ad::Graph& g) {
      return losses::loss_m1(g, xs, ys, xt, set, lambda).total;
    }, ps));
  });
  s.run("loss_m2", [&](SuiteEntry& e) {
    auto set = nn::build_component_set(tiny_arch(3), rng.below(1u << 30), "m2");
    randomize(set, rng);
    const Tensor xs = random_tensor(rng, {4, 3}), xt = random_tensor(rng, {4, 3});
    const auto ys = random_labels(rng, 4, 3);
    const auto ps = set.parameters();
    s.record(e, check_case([&](ad::Graph& g) { return losses::loss_m2(g, xs, ys, xt, set).total; }, ps));
  });
  s.run("loss_dual", [&](SuiteEntry& e) {
    auto m1 = nn::build_component_set(tiny_arch(3), rng.below(1u << 30), "m1");
    auto m2 = nn::build_component_set(tiny_arch(3), rng.below(1u << 30), "m2");
    randomize(m1, rng);
    randomize(m2, rng);
    const Tensor xs = random_tensor(rng, {4, 3}), xt = random_tensor(rng, {4, 3});
    const double lambda = rng.uniform(0.0, 1.0);
    auto ps = m1.parameters();
    const auto more = m2.parameters();
    ps.insert(ps.end(), more.begin(), more.end());
    s.record(e, check_case([&](ad::Graph& g) {
      return losses::loss_dual(g, xs, xt, m1, m2, lambda).total;
    }, ps));
  });
  return s.take();
}

}  // namespace dmat::gradcheck
