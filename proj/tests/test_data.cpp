// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "dmat/data.hpp"
#include "dmat/errors.hpp"
#include "helpers.hpp"
#include "idx_fixtures.hpp"

using namespace dmat;
using namespace dmat::data;

namespace {
double dist(const Tensor& f, std::size_t i, std::size_t j) {
  return std::hypot(f.at(i, 0) - f.at(j, 0), f.at(i, 1) - f.at(j, 1));
}
}  // namespace

TEST_CASE("two moons") {
  const auto a = gen_two_moons(101, 0.1, 4);
  CHECK(a.size() == 101);
  CHECK(a.num_classes == 2);
  CHECK(a.domain == Domain::kSource);
  REQUIRE(a.labels);
  const auto ones = std::count(a.labels->begin(), a.labels->end(), 1u);
  CHECK(std::abs(static_cast<long>(101 - ones) - static_cast<long>(ones)) <= 1);
  CHECK(a.features == gen_two_moons(101, 0.1, 4).features);
  CHECK(a.features != gen_two_moons(101, 0.1, 5).features);

  const auto clean = gen_two_moons(50, 0.0, 1);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if ((*clean.labels)[i] != 0) continue;
    const double x = clean.features.at(i, 0), y = clean.features.at(i, 1);
    CHECK(std::fabs(std::hypot(x, y) - 1.0) <= 1e-12);
    CHECK(y >= -1e-12);
  }
}

TEST_CASE("domain_shift") {
  const auto ds = gen_two_moons(40, 0.1, 2);
  const auto same = domain_shift(ds, 0.0, {0.0, 0.0});
  CHECK(same.features == ds.features);
  CHECK(same.domain == Domain::kTarget);

  const auto full = domain_shift(ds, 360.0, {0.0, 0.0});
  for (std::size_t i = 0; i < ds.features.size(); ++i)
    CHECK(std::fabs(full.features.data[i] - ds.features.data[i]) <= 1e-9);

  const auto rot = domain_shift(ds, 40.0, {1.5, -2.0});
  CHECK(rot.labels == ds.labels);
  CHECK(rot.num_classes == ds.num_classes);
  for (std::size_t i = 0; i < 40; i += 3)
    for (std::size_t j = i + 1; j < 40; j += 5)
      CHECK(std::fabs(dist(rot.features, i, j) - dist(ds.features, i, j)) <= 1e-9);

  DomainDataset three{Tensor::zeros({2, 3}), std::nullopt, Domain::kSource, 2};
  CHECK_THROWS_AS(domain_shift(three, 10.0, {0.0, 0.0}), ContractError);
}

TEST_CASE("blob shift") {
  const auto [s0, t0] = gen_blob_shift(300, 3, 4.0, {0.0, 0.0}, 9);
  CHECK(s0.features == t0.features);
  CHECK(t0.domain == Domain::kTarget);
  const auto [s1, t1] = gen_blob_shift(300, 3, 4.0, {1.0, -2.0}, 9);
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(t1.features.at(i, 0) == doctest::Approx(s1.features.at(i, 0) + 1.0));
    CHECK(t1.features.at(i, 1) == doctest::Approx(s1.features.at(i, 1) - 2.0));
  }
  CHECK(s1.features == s0.features);

  // Noise-free draws sit on the means: neighbouring means are `separation` apart.
  const auto [clean, unused] = gen_blob_shift(4, 4, 3.0, {0.0, 0.0}, 1, 0.0);
  std::vector<std::pair<double, double>> means(4);
  for (std::size_t i = 0; i < 4; ++i)
    means[(*clean.labels)[i]] = {clean.features.at(i, 0), clean.features.at(i, 1)};
  for (std::size_t k = 0; k < 4; ++k) {
    const auto [x0, y0] = means[k];
    const auto [x1, y1] = means[(k + 1) % 4];
    CHECK(std::hypot(x1 - x0, y1 - y0) == doctest::Approx(3.0).epsilon(1e-12));
  }
}

TEST_CASE("batches") {
  const auto s = gen_two_moons(256, 0.1, 1);
  const auto t = gen_two_moons(256, 0.1, 2);
  const auto pairs = batches(s, t.features, 128, 7);
  CHECK(pairs.size() == 2);
  const auto again = batches(s, t.features, 128, 7);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].source_index == again[i].source_index);
    CHECK(pairs[i].target_index == again[i].target_index);
  }
  std::set<std::size_t> seen;
  for (const auto& p : pairs)
    for (std::size_t i : p.source_index) CHECK(seen.insert(i).second);

  CHECK(batches(s, t.features, 100, 7).size() == 2);  // partial batch dropped
  CHECK_THROWS_AS(batches(s, t.features, 257, 7), ContractError);
  CHECK(pairs[0].source.rows() == 128);
  CHECK(pairs[0].source_labels.size() == 128);
  CHECK(pairs[0].source.row(0)[0] == s.features.at(pairs[0].source_index[0], 0));
}

TEST_CASE("IDX loader") {
  testing::TempDir dir("idx");
  const auto img = dir.path / "img.idx";
  const auto lbl = dir.path / "lbl.idx";

  SUBCASE("hand-built fixture") {
    testing::write_bytes(img, testing::idx_images_bytes(0x803, 2, 2, 2, {0, 255, 128, 64, 1, 2, 3, 4}));
    testing::write_bytes(lbl, testing::idx_labels_bytes(0x801, 2, {7, 3}));
    const auto ds = load_idx(img, lbl);
    CHECK(ds.features.shape == Shape{2, 4});
    CHECK(ds.features.data[0] == 0.0);
    CHECK(ds.features.data[1] == 1.0);
    CHECK(ds.features.data[2] == 128.0 / 255.0);
    CHECK(ds.features.data[3] == 64.0 / 255.0);
    CHECK(*ds.labels == Labels{7, 3});
    for (double v : ds.features.data) CHECK((v >= 0.0 && v <= 1.0));
  }
  SUBCASE("wrong magic names both values") {
    testing::write_bytes(img, testing::idx_images_bytes(0x802, 1, 1, 1, {0}));
    try {
      load_idx(img);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("0x00000803") != std::string::npos);
      CHECK(msg.find("0x00000802") != std::string::npos);
    }
  }
  SUBCASE("truncated payload reports byte counts") {
    testing::write_bytes(img, testing::idx_images_bytes(0x803, 2, 2, 2, {1, 2, 3}));
    try {
      load_idx(img);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("expected 8 bytes") != std::string::npos);
      CHECK(msg.find("found 3") != std::string::npos);
    }
  }
  SUBCASE("truncated header") {
    auto bytes = testing::idx_images_bytes(0x803, 2, 2, 2, {});
    bytes.resize(10);
    testing::write_bytes(img, bytes);
    CHECK_THROWS_AS(load_idx(img), FormatError);
  }
  SUBCASE("count mismatch") {
    testing::write_bytes(img, testing::idx_images_bytes(0x803, 2, 1, 1, {1, 2}));
    testing::write_bytes(lbl, testing::idx_labels_bytes(0x801, 3, {0, 1, 2}));
    CHECK_THROWS_AS(load_idx(img, lbl), ConsistencyError);
  }
  SUBCASE("round trip through the writer") {
    std::vector<std::uint8_t> pixels(3 * 4 * 5);
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<std::uint8_t>(i * 37);
    write_idx_images(img, pixels, 3, 4, 5);
    const std::uint8_t labels[] = {1, 0, 9};
    write_idx_labels(lbl, labels);
    const auto ds = load_idx(img, lbl);
    for (std::size_t i = 0; i < pixels.size(); ++i)
      CHECK(static_cast<int>(std::lround(ds.features.data[i] * 255.0)) == pixels[i]);
    CHECK(*ds.labels == Labels{1, 0, 9});
  }
}

TEST_CASE("CSV export") {
  testing::TempDir dir("csv");
  const auto s = gen_two_moons(3, 0.0, 1);
  const auto t = domain_shift(s, 10.0, {0.0, 0.0});
  const DomainDataset* sets[] = {&s, &t};
  write_csv(dir.path / "d.csv", sets);
  const auto body = testing::slurp(dir.path / "d.csv");
  CHECK(body.rfind("f0,f1,label,domain\n", 0) == 0);
  CHECK(std::count(body.begin(), body.end(), '\n') == 7);
  CHECK(body.find('\r') == std::string::npos);
}
