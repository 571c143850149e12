// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "dmat/data.hpp"
#include "dmat/errors.hpp"

namespace dmat::data {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("idx: cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::string& bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i)
    v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
  return v;
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "0x%08X", v);
  return buf;
}

// Validates magic and header length; returns the dimension sizes.
std::vector<std::uint32_t> read_header(const std::string& bytes, const std::filesystem::path& path,
                                       std::uint32_t expected_magic, std::size_t rank) {
  const std::size_t header = 4 * (1 + rank);
  if (bytes.size() < 4)
    throw FormatError("idx " + path.string() + ": truncated header, expected " +
                      std::to_string(header) + " bytes, found " + std::to_string(bytes.size()));
  const std::uint32_t magic = be32(bytes, 0);
  if (magic != expected_magic)
    throw FormatError("idx " + path.string() + ": bad magic, expected " + hex32(expected_magic) +
                      ", found " + hex32(magic));
  if (bytes.size() < header)
    throw FormatError("idx " + path.string() + ": truncated header, expected " +
                      std::to_string(header) + " bytes, found " + std::to_string(bytes.size()));
  std::vector<std::uint32_t> dims(rank);
  for (std::size_t i = 0; i < rank; ++i) dims[i] = be32(bytes, 4 * (1 + i));
  return dims;
}

void check_payload(const std::string& bytes, const std::filesystem::path& path, std::size_t header,
                   std::size_t payload) {
  const std::size_t found = bytes.size() - header;
  if (found < payload)
    throw FormatError("idx " + path.string() + ": truncated payload, expected " +
                      std::to_string(payload) + " bytes, found " + std::to_string(found));
  if (found > payload)
    throw FormatError("idx " + path.string() + ": " + std::to_string(found - payload) +
                      " trailing bytes after " + std::to_string(payload) + "-byte payload");
}

void put_be32(std::string& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

DomainDataset load_idx(const std::filesystem::path& images,
                       const std::optional<std::filesystem::path>& labels, std::size_t num_classes,
                       Domain domain) {
  const std::string img = read_file(images);
  const auto dims = read_header(img, images, kImagesMagic, 3);
  const std::size_t n = dims[0];
  const std::size_t pixels = static_cast<std::size_t>(dims[1]) * dims[2];
  check_payload(img, images, 16, n * pixels);

  DomainDataset ds{Tensor::zeros({n, pixels}), std::nullopt, domain, num_classes};
  for (std::size_t i = 0; i < n * pixels; ++i)
    ds.features.data[i] = static_cast<unsigned char>(img[16 + i]) / 255.0;

  if (labels) {
    const std::string lab = read_file(*labels);
    const auto ldims = read_header(lab, *labels, kLabelsMagic, 1);
    check_payload(lab, *labels, 8, ldims[0]);
    if (ldims[0] != n)
      throw ConsistencyError("idx: " + std::to_string(n) + " images but " +
                             std::to_string(ldims[0]) + " labels");
    Labels y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<unsigned char>(lab[8 + i]);
      if (y[i] >= num_classes)
        throw FormatError("idx " + labels->string() + ": label " + std::to_string(y[i]) +
                          " at index " + std::to_string(i) + " outside [0, " +
                          std::to_string(num_classes) + ")");
    }
    ds.labels = std::move(y);
  }
  return ds;
}

void write_idx_images(const std::filesystem::path& path, std::span<const std::uint8_t> pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols) {
  if (pixels.size() != static_cast<std::size_t>(count) * rows * cols)
    throw ContractError("write_idx_images: pixel count does not match dimensions");
  std::string out;
  put_be32(out, kImagesMagic);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  write_bytes(path, out);
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::string out;
  put_be32(out, kLabelsMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.append(reinterpret_cast<const char*>(labels.data()), labels.size());
  write_bytes(path, out);
}

}  // namespace dmat::data
