// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dmat/autodiff.hpp"
#include "dmat/parameter.hpp"

namespace dmat::nn {

enum class OutputActivation { kNone, kSoftmax };

/// Layer widths of a fully connected stack; hidden layers use relu.
struct NetworkSpec {
  std::vector<std::size_t> layer_dims;
  OutputActivation output_activation = OutputActivation::kNone;

  /// Throws ContractError unless there are >= 2 positive dims.
  void validate() const;
  std::size_t in_dim() const { return layer_dims.front(); }
  std::size_t out_dim() const { return layer_dims.back(); }
};

struct LinearLayer {
  Parameter weight;  // [out_dim, in_dim]
  Parameter bias;    // [out_dim]

  std::size_t in_dim() const { return weight.value.shape[1]; }
  std::size_t out_dim() const { return weight.value.shape[0]; }
};

struct LayerStack {
  NetworkSpec spec;
  std::vector<LinearLayer> layers;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

/// Glorot-uniform weights, zero biases, fully determined by seed. Parameter
/// names are "<prefix>.<layer>.weight" / "<prefix>.<layer>.bias".
LayerStack init_params(const NetworkSpec& spec, std::uint64_t seed, const std::string& prefix = "net");

/// Alternates affine maps and relu; applies the output activation last.
ad::Var forward_stack(ad::Graph& graph, const LayerStack& stack, ad::Var x);

/// Sizes of the five components of one module.
struct Architecture {
  std::size_t input_dim = 2;
  std::vector<std::size_t> g_hidden{64};
  std::size_t feature_dim = 32;
  std::vector<std::size_t> d_hidden{16};
  std::vector<std::size_t> c_hidden{16};
  std::size_t num_classes = 2;

  void validate() const;
  NetworkSpec g_spec() const;
  NetworkSpec t_spec() const;
  NetworkSpec d_spec() const;
  NetworkSpec c_spec() const;
};

enum class Component : std::uint8_t { kG, kT, kD, kCa, kCb };
inline constexpr Component kAllComponents[] = {Component::kG, Component::kT, Component::kD,
                                               Component::kCa, Component::kCb};
const char* component_name(Component c);

/// Feature extractor G, square linear transformation T, domain
/// discriminator D (2 logits), and two classifiers with identical layout.
struct ComponentSet {
  LayerStack G, T, D, Ca, Cb;

  LayerStack& get(Component c);
  const LayerStack& get(Component c) const;
  std::vector<Parameter*> parameters(std::initializer_list<Component> which);
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  /// Structural checks: T square and matching G's output, D ending in two
  /// logits, Ca and Cb with identical layer dims.
  void validate() const;
};

/// Every component gets its own seed derived from `seed`. `prefix` names
/// the module ("m1", "m2") in parameter names.
ComponentSet build_component_set(const Architecture& arch, std::uint64_t seed,
                                 const std::string& prefix = "m");

/// Checkpoint layout (all integers little-endian):
///   u32 entry count
///   per entry: u32 name length, UTF-8 name bytes, u32 rank, rank x u32 dims
///   then every entry's values as f64, in entry order.
void save_parameters(const std::filesystem::path& path, const std::vector<const Parameter*>& params);
/// Loads into params matching by name; shapes must agree exactly.
void load_parameters(const std::filesystem::path& path, const std::vector<Parameter*>& params);

}  // namespace dmat::nn
