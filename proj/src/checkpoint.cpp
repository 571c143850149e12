// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_map>

#include "dmat/errors.hpp"
#include "dmat/nn.hpp"

namespace dmat::nn {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::filesystem::path& path) : bytes_(bytes), path_(path) {}

  std::uint64_t take(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
  }

  std::string take_string(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError("checkpoint " + path_.string() + ": truncated at byte " +
                        std::to_string(pos_) + ", need " + std::to_string(n) + " more of " +
                        std::to_string(bytes_.size()));
    }
  }

  const std::string& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_parameters(const std::filesystem::path& path, const std::vector<const Parameter*>& params) {
  std::string out;
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put_u32(out, static_cast<std::uint32_t>(p->value.shape.size()));
    for (std::size_t d : p->value.shape) put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const Parameter* p : params)
    for (double v : p->value.data) put_u64(out, std::bit_cast<std::uint64_t>(v));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("failed writing " + path.string());
}

void load_parameters(const std::filesystem::path& path, const std::vector<Parameter*>& params) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(bytes, path);

  struct Entry {
    std::string name;
    Shape shape;
  };
  const auto count = static_cast<std::size_t>(r.take(4));
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < count; ++i) {
    Entry e;
    e.name = r.take_string(static_cast<std::size_t>(r.take(4)));
    const auto rank = static_cast<std::size_t>(r.take(4));
    for (std::size_t d = 0; d < rank; ++d) e.shape.push_back(static_cast<std::size_t>(r.take(4)));
    entries.push_back(std::move(e));
  }

  std::unordered_map<std::string, Parameter*> by_name;
  for (Parameter* p : params) by_name.emplace(p->name, p);
  if (entries.size() != params.size())
    throw ConsistencyError("checkpoint " + path.string() + ": has " + std::to_string(entries.size()) +
                           " entries, model has " + std::to_string(params.size()));

  std::vector<std::pair<Parameter*, std::vector<double>>> staged;
  for (const Entry& e : entries) {
    auto it = by_name.find(e.name);
    if (it == by_name.end())
      throw ConsistencyError("checkpoint " + path.string() + ": unknown parameter " + e.name);
    Parameter& p = *it->second;
    if (p.value.shape != e.shape)
      throw ConsistencyError("checkpoint " + path.string() + ": " + e.name + " has shape " +
                             to_string(e.shape) + ", model expects " + to_string(p.value.shape));
    std::vector<double> values(p.value.size());
    for (double& v : values) v = std::bit_cast<double>(r.take(8));
    staged.emplace_back(&p, std::move(values));
  }
  if (!r.done()) throw FormatError("checkpoint " + path.string() + ": trailing bytes");
  for (auto& [p, values] : staged) p->value.data = std::move(values);
}

}  // namespace dmat::nn
