// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "oldm/rng.hpp"
#include "oldm/tensor.hpp"

namespace oldm {

enum class InitKind {
  kZero,          // zero convolutions, output heads, biases
  kUniformFanIn,  // uniform in +-sqrt(1/fan_in)
};

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  InitKind init = InitKind::kZero;
  std::size_t fan_in = 0;
};

// Named parameter arrays with gradient slots. Registration order is the
// canonical order for initialization, optimizer updates and checkpoints, so
// identical construction sequences give identical bytes.
class ParamStore {
 public:
  Param& add(const std::string& name, const std::vector<std::size_t>& shape, InitKind init,
             std::size_t fan_in = 0);

  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Param>& entries() { return params_; }
  const std::vector<Param>& entries() const { return params_; }

  std::size_t total_values() const;

  void init_all(Rng& rng);
  void zero_grads();

  // Checkpoint format: "OLDM", u32 version=1, u32 tensor count, then per
  // tensor a u32 name length, the name, u32 rank, u64 dims, float32 data.
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace oldm
