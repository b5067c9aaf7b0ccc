// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "oldm/params.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "oldm/errors.hpp"

namespace oldm {

Param& ParamStore::add(const std::string& name, const std::vector<std::size_t>& shape,
                       InitKind init, std::size_t fan_in) {
  if (index_.count(name)) throw ConfigError("duplicate parameter: " + name);
  if (init == InitKind::kUniformFanIn && fan_in == 0)
    throw ConfigError("fan_in required for " + name);
  Param p;
  p.name = name;
  p.value = Tensor::zeros(shape);
  p.grad = Tensor::zeros(shape);
  p.init = init;
  p.fan_in = fan_in;
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return params_.back();
}

Param& ParamStore::at(const std::string& name) {
  const auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return params_[it->second];
}

const Param& ParamStore::at(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return params_[it->second];
}

std::size_t ParamStore::total_values() const {
  std::size_t n = 0;
  for (const Param& p : params_) n += p.value.data.size();
  return n;
}

void ParamStore::init_all(Rng& rng) {
  for (Param& p : params_) {
    switch (p.init) {
      case InitKind::kZero:
        std::fill(p.value.data.begin(), p.value.data.end(), 0.0);
        break;
      case InitKind::kUniformFanIn: {
        const double bound = std::sqrt(1.0 / static_cast<double>(p.fan_in));
        for (double& v : p.value.data) v = rng.uniform(-bound, bound);
        break;
      }
    }
    std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
  }
}

void ParamStore::zero_grads() {
  for (Param& p : params_)
    std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
}

void ParamStore::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
  auto put_u32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  os.write("OLDM", 4);
  put_u32(1);
  put_u32(static_cast<std::uint32_t>(params_.size()));
  for (const Param& p : params_) {
    put_u32(static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u32(static_cast<std::uint32_t>(p.value.shape.size()));
    for (std::size_t d : p.value.shape) {
      const std::uint64_t d64 = d;
      os.write(reinterpret_cast<const char*>(&d64), 8);
    }
    std::vector<float> buf(p.value.data.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(p.value.data[i]);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!os) throw IoError("short checkpoint write: " + path.string());
}

void ParamStore::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  auto get_u32 = [&] {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "OLDM", 4) != 0)
    throw IoError("bad checkpoint magic: " + path.string());
  const std::uint32_t version = get_u32();
  if (version != 1) throw IoError("unsupported checkpoint version");
  const std::uint32_t count = get_u32();
  std::size_t loaded = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32();
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const std::uint32_t rank = get_u32();
    std::vector<std::size_t> shape(rank);
    std::size_t total = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      std::uint64_t d = 0;
      is.read(reinterpret_cast<char*>(&d), 8);
      shape[r] = static_cast<std::size_t>(d);
      total *= shape[r];
    }
    std::vector<float> buf(total);
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(total * sizeof(float)));
    if (!is) throw IoError("truncated checkpoint: " + path.string());
    if (!has(name)) throw IoError("checkpoint tensor not in model: " + name);
    Param& p = at(name);
    if (p.value.shape != shape) throw IoError("checkpoint shape mismatch for " + name);
    for (std::size_t j = 0; j < total; ++j) p.value.data[j] = static_cast<double>(buf[j]);
    ++loaded;
  }
  if (loaded != params_.size())
    throw IoError("checkpoint missing parameters: " + path.string());
}

}  // namespace oldm
