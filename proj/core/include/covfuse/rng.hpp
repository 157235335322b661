// Copyright 2026 The covfuse Authors
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

// Portable random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are implementation-defined, so the
// uniform and normal transforms are implemented here: uniform doubles take
// the top 53 bits of one engine draw, normals use the Box-Muller transform
// with both outputs consumed in order. Results are bit-identical on every
// conforming platform.

#pragma once

#include "covfuse/linalg.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

namespace covfuse {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for a named sub-stream: mixes the master seed, a stable (FNV-1a)
/// hash of `name` and an index. Distinct (name, index) pairs give
/// statistically independent streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name,
                          std::uint64_t index = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Zero-mean Gaussian vector with the given covariance (Cholesky factor;
  /// PSD inputs fall back to an eigen square root).
  Vector gaussian(const Matrix& cov);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace covfuse
