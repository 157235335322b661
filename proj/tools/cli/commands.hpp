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

// Subcommands of the covfuse tool. Each command writes into a fresh run
// directory <out>/<command>-<UTC timestamp> holding its outputs and one
// manifest.json, and prints that directory on stdout.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace covfuse::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitIo = 4,
};

inline constexpr const char* kToolVersion = "0.1.0";

struct FuseOptions {
  std::filesystem::path a;
  std::filesystem::path b;
  std::string method = "nmci";
  /// Blocks separated by ';', indices by ',' (0-based): "0,1;2".
  std::optional<std::string> partition;
  std::optional<std::filesystem::path> pattern;
  std::optional<std::filesystem::path> cross;
  std::optional<double> omega;
  std::string block_check = "strict";
  std::size_t n = 200;
  std::uint64_t seed = 1;
  double tol = 1e-7;
  std::filesystem::path out = "runs";
};

struct CompareOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> mc;
  std::vector<std::size_t> n;
  std::size_t jobs = 1;
  std::filesystem::path out = "runs";
};

struct TrackOptions {
  std::optional<std::filesystem::path> config;
  /// Built-in scenario when no config file is given: desk or full.
  std::string preset = "desk";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> mc;
  std::optional<std::size_t> steps;
  std::vector<std::string> methods;
  std::size_t jobs = 1;
  std::filesystem::path out = "runs";
};

/// Returns the run directory.
std::filesystem::path cmd_fuse(const FuseOptions& options, std::ostream& log);
std::filesystem::path cmd_compare(const CompareOptions& options,
                                  std::ostream& log);
std::filesystem::path cmd_track(const TrackOptions& options,
                                std::ostream& log);

/// Parses "0,1;2" into blocks.
std::vector<std::vector<std::size_t>> parse_blocks(const std::string& text);

/// Full command line: parses, dispatches and maps exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

}  // namespace covfuse::cli
