// Copyright 2026 The oldm Authors
// SPDX-License-Identifier: Apache-2.0

#include "oldm/conditioning.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "oldm/errors.hpp"
#include "oldm/rng.hpp"

namespace oldm {

TextPrompt format_prompt(const std::string& category, const std::string& description) {
  if (category.empty()) throw ValidationError("format_prompt: category must be nonempty");
  TextPrompt p;
  p.category = category;
  p.description = description;
  if (description.empty()) {
    p.rendered = "An object from class " + category + ".";
  } else {
    p.rendered = "An object from class " + category + ", " + description + ".";
  }
  return p;
}

namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (std::isalnum(uc)) {
      cur.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

}  // namespace

std::vector<double> HashTextEncoder::encode(const TextPrompt& prompt) const {
  const auto tokens = tokenize(prompt.rendered);
  if (tokens.empty()) throw ValidationError("encode_text: prompt has no tokens");
  std::vector<double> sum(dim_, 0.0);
  for (const std::string& tok : tokens) {
    Rng rng(fnv1a64(tok.data(), tok.size()));
    for (std::size_t i = 0; i < dim_; ++i) sum[i] += rng.normal();
  }
  double norm2 = 0.0;
  for (double v : sum) norm2 += v * v;
  const double norm = std::sqrt(norm2);
  if (norm == 0.0) throw ValidationError("encode_text: degenerate zero embedding");
  for (double& v : sum) v /= norm;
  return sum;
}

FileTextEncoder::FileTextEncoder(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open embedding file: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ValidationError("embedding file line " + std::to_string(lineno) + ": missing tab");
    std::istringstream vs(line.substr(tab + 1));
    std::vector<double> vec;
    double v = 0.0;
    while (vs >> v) vec.push_back(v);
    if (vec.empty())
      throw ValidationError("embedding file line " + std::to_string(lineno) + ": no values");
    table_[line.substr(0, tab)] = std::move(vec);
  }
}

std::vector<double> FileTextEncoder::encode(const TextPrompt& prompt) const {
  const auto it = table_.find(prompt.rendered);
  if (it == table_.end())
    throw ValidationError("no embedding for prompt: " + prompt.rendered);
  return it->second;
}

std::vector<double> fourier_embed(const ObjectBox& box, const BoxNormalization& norm,
                                  std::size_t l_f) {
  if (norm.center_extent <= 0.0 || norm.size_extent <= 0.0)
    throw ValidationError("fourier_embed: normalization constants must be positive");
  const double fields[7] = {
      box.x_c / norm.center_extent, box.y_c / norm.center_extent, box.z_c / norm.center_extent,
      box.w / norm.size_extent,     box.l / norm.size_extent,     box.h / norm.size_extent,
      box.r / SensorConfig::kPi};
  std::vector<double> out;
  out.reserve(14 * l_f);
  for (double raw : fields) {
    const double p = std::clamp(raw, -1.0, 1.0);
    double freq = SensorConfig::kPi;  // 2^k pi, starting at k=0
    for (std::size_t k = 0; k < l_f; ++k) {
      out.push_back(std::sin(freq * p));
      out.push_back(std::cos(freq * p));
      freq *= 2.0;
    }
  }
  return out;
}

std::vector<double> combine_conditions(const std::vector<double>& f_b,
                                       const std::vector<double>& f_t, const Tensor& weight,
                                       const Tensor& bias) {
  const std::size_t in_dim = f_b.size() + f_t.size();
  if (weight.shape.size() != 2 || weight.shape[1] != in_dim)
    throw ConfigError("combine_conditions: weight must be D_c x (|f_B|+|f_T|)");
  const std::size_t d_c = weight.shape[0];
  if (bias.data.size() != d_c) throw ConfigError("combine_conditions: bias size mismatch");
  std::vector<double> c(d_c);
  for (std::size_t i = 0; i < d_c; ++i) {
    double acc = bias.data[i];
    const double* row = &weight.data[i * in_dim];
    for (std::size_t j = 0; j < f_b.size(); ++j) acc += row[j] * f_b[j];
    for (std::size_t j = 0; j < f_t.size(); ++j) acc += row[f_b.size() + j] * f_t[j];
    c[i] = acc;
  }
  return c;
}

std::vector<double> timestep_embedding(std::size_t t, std::size_t d_c) {
  if (t < 1) throw ValidationError("timestep_embedding: t must be >= 1");
  if (d_c % 2 != 0) throw ConfigError("timestep_embedding: dimension must be even");
  std::vector<double> out(d_c);
  for (std::size_t j = 0; j * 2 < d_c; ++j) {
    const double arg =
        static_cast<double>(t) /
        std::pow(10000.0, static_cast<double>(2 * j) / static_cast<double>(d_c));
    out[2 * j] = std::sin(arg);
    out[2 * j + 1] = std::cos(arg);
  }
  return out;
}

}  // namespace oldm
