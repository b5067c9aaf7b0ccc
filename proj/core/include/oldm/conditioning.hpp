// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "oldm/tensor.hpp"
#include "oldm/types.hpp"

namespace oldm {

inline constexpr std::size_t kTextDim = 64;       // D_t
inline constexpr std::size_t kFourierFreqs = 8;   // L_f
inline constexpr std::size_t kConditionDim = 128; // D_c

struct TextPrompt {
  std::string category;
  std::string description;
  std::string rendered;
};

// "An object from class <category>, <description>." ; the description clause
// is dropped entirely when empty.
TextPrompt format_prompt(const std::string& category, const std::string& description);

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual std::vector<double> encode(const TextPrompt& prompt) const = 0;
};

// Stand-in for a pretrained sentence encoder. Tokens are lowercased words
// (split on non-alphanumerics), each mapped to a fixed pseudo-random vector
// seeded by its FNV-1a hash; the sentence embedding is the L2-normalized
// token mean. Deterministic across runs and platforms.
class HashTextEncoder : public TextEncoder {
 public:
  explicit HashTextEncoder(std::size_t dim = kTextDim) : dim_(dim) {}
  std::vector<double> encode(const TextPrompt& prompt) const override;

 private:
  std::size_t dim_;
};

// Loads precomputed embeddings from lines of "<prompt>\t<values...>".
class FileTextEncoder : public TextEncoder {
 public:
  explicit FileTextEncoder(const std::filesystem::path& path);
  std::vector<double> encode(const TextPrompt& prompt) const override;

 private:
  std::map<std::string, std::vector<double>> table_;
};

struct BoxNormalization {
  double center_extent = 50.0;  // meters, half the scene extent
  double size_extent = 10.0;    // meters
};

// Fourier features of the 7 box scalars: each normalized field p contributes
// [sin(2^k pi p), cos(2^k pi p)] for k = 0..l_f-1, field-major. Output size
// 14 * l_f.
std::vector<double> fourier_embed(const ObjectBox& box, const BoxNormalization& norm,
                                  std::size_t l_f = kFourierFreqs);

// c = W [f_B ; f_T] + b. The autodiff path in networks.cpp mirrors this; the
// plain version serves inference and oracle tests.
std::vector<double> combine_conditions(const std::vector<double>& f_b,
                                       const std::vector<double>& f_t, const Tensor& weight,
                                       const Tensor& bias);

// Sinusoidal embedding: entry 2j = sin(t / 10000^(2j/d)), 2j+1 the cosine.
std::vector<double> timestep_embedding(std::size_t t, std::size_t d_c = kConditionDim);

}  // namespace oldm
