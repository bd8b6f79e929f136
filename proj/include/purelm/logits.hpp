// Copyright 2026 The Purelm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "purelm/errors.hpp"

namespace purelm {

// Per-step score/distribution vectors over the shared vocabulary. Plain
// vectors keep the math code direct; the invariants are enforced where the
// vectors are produced.
using LogitVector = std::vector<double>;
using ProbVector = std::vector<double>;

inline void check_finite(const LogitVector& z, const char* where) {
  for (double v : z) {
    if (!std::isfinite(v)) throw IntegrityError(std::string(where) + ": non-finite logit");
  }
}

inline bool is_probability_vector(const ProbVector& p, double tol = 1e-9) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

// Max-stabilized softmax(z / T).
inline ProbVector softmax_with_temperature(const LogitVector& z, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw std::domain_error("softmax_with_temperature: temperature must be > 0");
  if (z.empty()) throw IntegrityError("softmax_with_temperature: empty logits");
  check_finite(z, "softmax_with_temperature");
  double zmax = *std::max_element(z.begin(), z.end());
  ProbVector p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp((z[i] - zmax) / temperature);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

inline ProbVector softmax(const LogitVector& z) { return softmax_with_temperature(z, 1.0); }

// Elementwise log of a full-support probability vector.
inline std::vector<double> log_probs(const ProbVector& p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::log(p[i]);
  return out;
}

}  // namespace purelm
