// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "oldm/errors.hpp"
#include "oldm/params.hpp"
#include "oldm/rng.hpp"
#include "test_util.hpp"

using namespace oldm;
using oldm::test::TempDir;

TEST_CASE("zero-init params come out zero, fan-in params stay in range") {
  ParamStore ps;
  ps.add("head", {4, 4}, InitKind::kZero);
  ps.add("w", {8, 16}, InitKind::kUniformFanIn, 16);
  Rng rng(1);
  ps.init_all(rng);
  for (double v : ps.at("head").value.data) CHECK(v == 0.0);
  const double bound = std::sqrt(1.0 / 16.0);
  bool any_nonzero = false;
  for (double v : ps.at("w").value.data) {
    CHECK(std::abs(v) <= bound);
    any_nonzero = any_nonzero || v != 0.0;
  }
  CHECK(any_nonzero);
}

TEST_CASE("init is deterministic in registration order") {
  auto build = [] {
    ParamStore ps;
    ps.add("a", {3, 3}, InitKind::kUniformFanIn, 3);
    ps.add("b", {5}, InitKind::kUniformFanIn, 5);
    Rng rng(42);
    ps.init_all(rng);
    return ps;
  };
  ParamStore x = build();
  ParamStore y = build();
  for (std::size_t p = 0; p < x.entries().size(); ++p)
    for (std::size_t i = 0; i < x.entries()[p].value.data.size(); ++i)
      CHECK(x.entries()[p].value.data[i] == y.entries()[p].value.data[i]);
}

TEST_CASE("duplicate names are rejected and lookups check existence") {
  ParamStore ps;
  ps.add("w", {2}, InitKind::kZero);
  CHECK_THROWS_AS(ps.add("w", {3}, InitKind::kZero), ConfigError);
  CHECK_THROWS(ps.at("missing"));
  CHECK(ps.has("w"));
  CHECK_FALSE(ps.has("missing"));
}

TEST_CASE("gradients match value shapes and zero_grads clears them") {
  ParamStore ps;
  ps.add("w", {2, 3}, InitKind::kUniformFanIn, 3);
  Rng rng(2);
  ps.init_all(rng);
  Param& p = ps.at("w");
  CHECK(p.grad.data.size() == p.value.data.size());
  for (double& g : p.grad.data) g = 1.5;
  ps.zero_grads();
  for (double g : p.grad.data) CHECK(g == 0.0);
  CHECK(ps.total_values() == 6);
}

TEST_CASE("save/load roundtrip restores values at float32 precision") {
  TempDir dir("params");
  const std::filesystem::path path = dir.path() / "ckpt.bin";
  ParamStore ps;
  ps.add("alpha", {2, 2}, InitKind::kUniformFanIn, 2);
  ps.add("beta", {3}, InitKind::kZero);
  Rng rng(7);
  ps.init_all(rng);
  ps.at("beta").value.data = {0.25, -1.0, 3.5};  // exact in float32
  ps.save(path);

  ParamStore fresh;
  fresh.add("alpha", {2, 2}, InitKind::kUniformFanIn, 2);
  fresh.add("beta", {3}, InitKind::kZero);
  fresh.load(path);
  for (std::size_t i = 0; i < 4; ++i) {
    const float truncated = static_cast<float>(ps.at("alpha").value.data[i]);
    CHECK(fresh.at("alpha").value.data[i] == static_cast<double>(truncated));
  }
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(fresh.at("beta").value.data[i] == ps.at("beta").value.data[i]);
}

TEST_CASE("checkpoint layout starts with the OLDM magic and version 1") {
  TempDir dir("params");
  const std::filesystem::path path = dir.path() / "ckpt.bin";
  ParamStore ps;
  ps.add("w", {2}, InitKind::kZero);
  Rng rng(1);
  ps.init_all(rng);
  ps.save(path);
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  std::uint32_t version = 0, count = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&count), 4);
  CHECK(std::string(magic, 4) == "OLDM");
  CHECK(version == 1);
  CHECK(count == 1);
}

TEST_CASE("same save twice is bitwise identical") {
  TempDir dir("params");
  ParamStore ps;
  ps.add("w", {16}, InitKind::kUniformFanIn, 16);
  Rng rng(5);
  ps.init_all(rng);
  ps.save(dir.path() / "a.bin");
  ps.save(dir.path() / "b.bin");
  std::ifstream a(dir.path() / "a.bin", std::ios::binary);
  std::ifstream b(dir.path() / "b.bin", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK_FALSE(sa.empty());
}

TEST_CASE("load rejects missing files, bad magic, and mismatched stores") {
  TempDir dir("params");
  ParamStore ps;
  ps.add("w", {2}, InitKind::kZero);
  CHECK_THROWS_AS(ps.load(dir.path() / "absent.bin"), IoError);

  const std::filesystem::path junk = dir.path() / "junk.bin";
  {
    std::ofstream out(junk, std::ios::binary);
    out << "NOPE0000";
  }
  CHECK_THROWS_AS(ps.load(junk), IoError);

  const std::filesystem::path good = dir.path() / "good.bin";
  Rng rng(1);
  ps.init_all(rng);
  ps.save(good);
  ParamStore other;
  other.add("different", {2}, InitKind::kZero);
  CHECK_THROWS_AS(other.load(good), IoError);
  ParamStore shape_clash;
  shape_clash.add("w", {3}, InitKind::kZero);
  CHECK_THROWS_AS(shape_clash.load(good), IoError);
}
