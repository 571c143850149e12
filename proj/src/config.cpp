// SPDX-License-Identifier: Apache-2.0
#include "dmat/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "dmat/errors.hpp"
#include "dmat/rng.hpp"

namespace dmat::config {

std::string_view dataset_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kTwoMoons: return "two_moons";
    case DatasetKind::kBlobs: return "blobs";
    case DatasetKind::kIdx: return "idx";
  }
  return "?";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Thrown by the value parsers; parse_config_text adds the line number.
struct BadValue {
  std::string what;
};

double parse_double(std::string_view v) {
  double out = 0.0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size())
    throw BadValue{"expected a number, got '" + std::string(v) + "'"};
  return out;
}

std::uint64_t parse_uint(std::string_view v) {
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size())
    throw BadValue{"expected a non-negative integer, got '" + std::string(v) + "'"};
  return out;
}

std::size_t parse_size(std::string_view v) { return static_cast<std::size_t>(parse_uint(v)); }

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto comma = v.find(',');
    parts.push_back(trim(v.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return parts;
}

std::vector<std::size_t> parse_widths(std::string_view v) {
  std::vector<std::size_t> out;
  if (v == "none") return out;
  for (auto part : split_list(v)) out.push_back(parse_size(part));
  return out;
}

std::array<double, 2> parse_pair(std::string_view v) {
  const auto parts = split_list(v);
  if (parts.size() != 2) throw BadValue{"expected two comma-separated numbers, got '" + std::string(v) + "'"};
  return {parse_double(parts[0]), parse_double(parts[1])};
}

std::string valid_variants() {
  std::string out;
  for (auto v : model::kAllVariants) {
    if (!out.empty()) out += ", ";
    out += model::variant_name(v);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"variant",
       [](RunConfig& c, std::string_view v) {
         const auto parsed = model::parse_variant(v);
         if (!parsed) throw BadValue{"unknown variant '" + std::string(v) + "'; valid: " + valid_variants()};
         c.train.variant = *parsed;
       }},
      {"dataset",
       [](RunConfig& c, std::string_view v) {
         if (v == "two_moons") c.dataset = DatasetKind::kTwoMoons;
         else if (v == "blobs") c.dataset = DatasetKind::kBlobs;
         else if (v == "idx") c.dataset = DatasetKind::kIdx;
         else throw BadValue{"unknown dataset '" + std::string(v) + "'; valid: two_moons, blobs, idx"};
       }},
      {"name", [](RunConfig& c, std::string_view v) { c.name = v; }},
      {"eta0", [](RunConfig& c, std::string_view v) { c.train.schedule.eta0 = parse_double(v); }},
      {"alpha", [](RunConfig& c, std::string_view v) { c.train.schedule.alpha = parse_double(v); }},
      {"beta", [](RunConfig& c, std::string_view v) { c.train.schedule.beta = parse_double(v); }},
      {"gamma", [](RunConfig& c, std::string_view v) { c.train.schedule.gamma = parse_double(v); }},
      {"momentum", [](RunConfig& c, std::string_view v) { c.train.schedule.momentum = parse_double(v); }},
      {"k", [](RunConfig& c, std::string_view v) { c.train.k = parse_size(v); }},
      {"epochs", [](RunConfig& c, std::string_view v) { c.train.epochs = parse_size(v); }},
      {"batch_size", [](RunConfig& c, std::string_view v) { c.train.batch_size = parse_size(v); }},
      {"eval_every", [](RunConfig& c, std::string_view v) { c.train.eval_every = parse_size(v); }},
      {"seed", [](RunConfig& c, std::string_view v) { c.train.seed = parse_uint(v); }},
      {"trials", [](RunConfig& c, std::string_view v) { c.trials = parse_size(v); }},
      {"out", [](RunConfig& c, std::string_view v) { c.out = std::string(v); }},
      {"embed_per_domain", [](RunConfig& c, std::string_view v) { c.embed_per_domain = parse_size(v); }},
      {"g_hidden", [](RunConfig& c, std::string_view v) { c.train.arch.g_hidden = parse_widths(v); }},
      {"feature_dim", [](RunConfig& c, std::string_view v) { c.train.arch.feature_dim = parse_size(v); }},
      {"d_hidden", [](RunConfig& c, std::string_view v) { c.train.arch.d_hidden = parse_widths(v); }},
      {"c_hidden", [](RunConfig& c, std::string_view v) { c.train.arch.c_hidden = parse_widths(v); }},
      {"n_source", [](RunConfig& c, std::string_view v) { c.n_source = parse_size(v); }},
      {"n_target", [](RunConfig& c, std::string_view v) { c.n_target = parse_size(v); }},
      {"noise", [](RunConfig& c, std::string_view v) { c.noise = parse_double(v); }},
      {"rotation", [](RunConfig& c, std::string_view v) { c.rotation = parse_double(v); }},
      {"translate", [](RunConfig& c, std::string_view v) { c.translate = parse_pair(v); }},
      {"blob_classes", [](RunConfig& c, std::string_view v) { c.blob_classes = parse_size(v); }},
      {"blob_separation", [](RunConfig& c, std::string_view v) { c.blob_separation = parse_double(v); }},
      {"blob_sigma", [](RunConfig& c, std::string_view v) { c.blob_sigma = parse_double(v); }},
      {"blob_shift", [](RunConfig& c, std::string_view v) { c.blob_shift = parse_pair(v); }},
      {"idx_source_images", [](RunConfig& c, std::string_view v) { c.idx.source_images = std::string(v); }},
      {"idx_source_labels", [](RunConfig& c, std::string_view v) { c.idx.source_labels = std::string(v); }},
      {"idx_target_images", [](RunConfig& c, std::string_view v) { c.idx.target_images = std::string(v); }},
      {"idx_target_labels", [](RunConfig& c, std::string_view v) { c.idx.target_labels = std::string(v); }},
      {"idx_classes", [](RunConfig& c, std::string_view v) { c.idx.num_classes = parse_size(v); }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  try {
    train.validate();
    train.arch.validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  if (trials == 0) throw ConfigError("config: trials must be >= 1");
  if (out.empty()) throw ConfigError("config: out must not be empty");
  switch (dataset) {
    case DatasetKind::kTwoMoons:
      if (n_source < 2 || n_target < 2) throw ConfigError("config: n_source and n_target must be >= 2");
      if (!(noise >= 0.0)) throw ConfigError("config: noise must be >= 0");
      break;
    case DatasetKind::kBlobs:
      if (n_source < 1) throw ConfigError("config: n_source must be >= 1");
      if (blob_classes < 2) throw ConfigError("config: blob_classes must be >= 2");
      if (!(blob_separation > 0.0) || !(blob_sigma >= 0.0))
        throw ConfigError("config: blob_separation must be > 0 and blob_sigma >= 0");
      break;
    case DatasetKind::kIdx:
      if (idx.source_images.empty() || idx.source_labels.empty() || idx.target_images.empty())
        throw ConfigError("config: idx needs idx_source_images, idx_source_labels and idx_target_images");
      if (idx.num_classes < 2) throw ConfigError("config: idx_classes must be >= 2");
      break;
  }
}

Datasets make_datasets(const RunConfig& c, std::uint64_t seed) {
  switch (c.dataset) {
    case DatasetKind::kTwoMoons: {
      auto source = data::gen_two_moons(c.n_source, c.noise, derive_seed(seed, 11));
      auto target = data::domain_shift(data::gen_two_moons(c.n_target, c.noise, derive_seed(seed, 12)),
                                       c.rotation, c.translate);
      return {std::move(source), std::move(target)};
    }
    case DatasetKind::kBlobs: {
      auto [source, target] = data::gen_blob_shift(c.n_source, c.blob_classes, c.blob_separation,
                                                   c.blob_shift, derive_seed(seed, 13), c.blob_sigma);
      return {std::move(source), std::move(target)};
    }
    case DatasetKind::kIdx: {
      auto source = data::load_idx(c.idx.source_images, c.idx.source_labels, c.idx.num_classes,
                                   data::Domain::kSource);
      auto target = data::load_idx(c.idx.target_images, c.idx.target_labels, c.idx.num_classes,
                                   data::Domain::kTarget);
      return {std::move(source), std::move(target)};
    }
  }
  throw ConfigError("config: unknown dataset");
}

RunConfig parse_config_text(std::string_view text) {
  RunConfig c;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second)
      throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
    if (value.empty()) throw ConfigError(where + "missing value for '" + std::string(key) + "'");
    try {
      it->second(c, value);
    } catch (const BadValue& e) {
      throw ConfigError(where + std::string(key) + ": " + e.what);
    }
  }

  for (const char* required : {"variant", "dataset"})
    if (!seen.contains(required)) throw ConfigError(std::string("config: missing required key '") + required + "'");
  // Image data keeps the larger batch; the synthetic sets are too small for it.
  if (!seen.contains("batch_size")) c.train.batch_size = c.dataset == DatasetKind::kIdx ? 128 : 64;
  if (c.name.empty()) c.name = dataset_name(c.dataset);
  c.validate();
  return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig c = parse_config_text(buf.str());
  // Relative IDX paths are resolved against the config file's directory.
  const auto base = path.parent_path();
  for (auto* p : {&c.idx.source_images, &c.idx.source_labels, &c.idx.target_images})
    if (!p->empty() && p->is_relative()) *p = base / *p;
  if (c.idx.target_labels && c.idx.target_labels->is_relative()) *c.idx.target_labels = base / *c.idx.target_labels;
  return c;
}

}  // namespace dmat::config
