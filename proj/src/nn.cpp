// SPDX-License-Identifier: Apache-2.0
#include "dmat/nn.hpp"

#include <cmath>

#include "dmat/errors.hpp"
#include "dmat/rng.hpp"

namespace dmat::nn {

void NetworkSpec::validate() const {
  if (layer_dims.size() < 2) throw ContractError("NetworkSpec: need at least two layer dims");
  for (std::size_t d : layer_dims)
    if (d == 0) throw ContractError("NetworkSpec: layer dims must be positive");
}

std::vector<Parameter*> LayerStack::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Parameter*> LayerStack::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

LayerStack init_params(const NetworkSpec& spec, std::uint64_t seed, const std::string& prefix) {
  spec.validate();
  Rng rng(seed);
  LayerStack stack{spec, {}};
  for (std::size_t i = 0; i + 1 < spec.layer_dims.size(); ++i) {
    const std::size_t in = spec.layer_dims[i];
    const std::size_t out = spec.layer_dims[i + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    std::vector<double> w(in * out);
    for (double& v : w) v = rng.uniform(-a, a);
    const std::string base = prefix + "." + std::to_string(i);
    stack.layers.push_back({Parameter(base + ".weight", Tensor({out, in}, std::move(w))),
                            Parameter(base + ".bias", Tensor::zeros({out}))});
  }
  return stack;
}

ad::Var forward_stack(ad::Graph& graph, const LayerStack& stack, ad::Var x) {
  const Shape& s = x.shape();
  if (s.size() != 2 || stack.layers.empty() || s[1] != stack.layers.front().in_dim()) {
    throw DimensionError("forward_stack: input " + to_string(s) + " does not match in_dim " +
                         std::to_string(stack.layers.empty() ? 0 : stack.layers.front().in_dim()));
  }
  ad::Var h = x;
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    const LinearLayer& l = stack.layers[i];
    h = ad::add(ad::matmul(h, ad::transpose(graph.parameter(l.weight))), graph.parameter(l.bias));
    if (i + 1 < stack.layers.size()) h = ad::relu(h);
  }
  if (stack.spec.output_activation == OutputActivation::kSoftmax) h = ad::softmax(h);
  return h;
}

void Architecture::validate() const {
  if (input_dim == 0 || feature_dim == 0 || num_classes == 0)
    throw ContractError("Architecture: input_dim, feature_dim and num_classes must be >= 1");
  for (const auto* dims : {&g_hidden, &d_hidden, &c_hidden})
    for (std::size_t d : *dims)
      if (d == 0) throw ContractError("Architecture: hidden widths must be positive");
}

namespace {
NetworkSpec chain(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  NetworkSpec s;
  s.layer_dims.push_back(in);
  s.layer_dims.insert(s.layer_dims.end(), hidden.begin(), hidden.end());
  s.layer_dims.push_back(out);
  return s;
}
}  // namespace

NetworkSpec Architecture::g_spec() const { return chain(input_dim, g_hidden, feature_dim); }
NetworkSpec Architecture::t_spec() const { return chain(feature_dim, {}, feature_dim); }
NetworkSpec Architecture::d_spec() const { return chain(feature_dim, d_hidden, 2); }
NetworkSpec Architecture::c_spec() const { return chain(feature_dim, c_hidden, num_classes); }

const char* component_name(Component c) {
  switch (c) {
    case Component::kG: return "G";
    case Component::kT: return "T";
    case Component::kD: return "D";
    case Component::kCa: return "Ca";
    case Component::kCb: return "Cb";
  }
  return "?";
}

LayerStack& ComponentSet::get(Component c) {
  return const_cast<LayerStack&>(std::as_const(*this).get(c));
}

const LayerStack& ComponentSet::get(Component c) const {
  switch (c) {
    case Component::kG: return G;
    case Component::kT: return T;
    case Component::kD: return D;
    case Component::kCa: return Ca;
    case Component::kCb: return Cb;
  }
  throw ContractError("ComponentSet: unknown component");
}

std::vector<Parameter*> ComponentSet::parameters(std::initializer_list<Component> which) {
  std::vector<Parameter*> out;
  for (Component c : which) {
    auto p = get(c).parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<Parameter*> ComponentSet::parameters() {
  return parameters({Component::kG, Component::kT, Component::kD, Component::kCa, Component::kCb});
}

std::vector<const Parameter*> ComponentSet::parameters() const {
  std::vector<const Parameter*> out;
  for (Component c : kAllComponents) {
    auto p = get(c).parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void ComponentSet::validate() const {
  if (T.layers.size() != 1 || T.layers[0].in_dim() != T.layers[0].out_dim())
    throw ContractError("ComponentSet: T must be a single square linear layer");
  if (G.layers.empty() || G.layers.back().out_dim() != T.layers[0].in_dim())
    throw ContractError("ComponentSet: T must match the feature extractor output size");
  if (D.layers.empty() || D.layers.back().out_dim() != 2)
    throw ContractError("ComponentSet: D must end in 2 logits");
  if (Ca.spec.layer_dims != Cb.spec.layer_dims)
    throw ContractError("ComponentSet: classifiers must share one layout");
}

ComponentSet build_component_set(const Architecture& arch, std::uint64_t seed,
                                 const std::string& prefix) {
  arch.validate();
  ComponentSet set{
      init_params(arch.g_spec(), derive_seed(seed, 1), prefix + ".G"),
      init_params(arch.t_spec(), derive_seed(seed, 2), prefix + ".T"),
      init_params(arch.d_spec(), derive_seed(seed, 3), prefix + ".D"),
      init_params(arch.c_spec(), derive_seed(seed, 4), prefix + ".Ca"),
      init_params(arch.c_spec(), derive_seed(seed, 5), prefix + ".Cb"),
  };
  set.validate();
  return set;
}

}  // namespace dmat::nn
