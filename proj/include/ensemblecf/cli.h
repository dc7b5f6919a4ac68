/*
 * Copyright 2026 The ensemblecf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: fixtures, fit, explain, evaluate and serve.
//
// Exit status is 0 on success, 1 on I/O, data, model or protocol errors and
// 2 on usage errors (unknown flags, bad values).

#ifndef ENSEMBLECF_CLI_H_
#define ENSEMBLECF_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ensemblecf/ensemble.h"
#include "json.hpp"

namespace ensemblecf {

inline constexpr char kVersion[] = "0.1.0";

struct RunConfig {
  std::string command;
  std::string dataset;
  std::string schema;
  // Bundled fixture used instead of dataset/schema files.
  std::string fixture;
  uint64_t fixture_seed = 17;
  // knn:K, forest:N,DEPTH or external:COMMAND.
  std::string blackbox = "forest:32,8";
  // Saved model; takes precedence over `blackbox`.
  std::string model;
  std::string explainer = "ensemble";
  // identity, kernel:S or linear:Q; empty runs in the domain.
  std::string codec;
  int k = 4;
  std::optional<uint64_t> seed;
  size_t index = 0;
  size_t n_instances = 20;
  double test_fraction = 0.2;
  int workers = 1;
  EnsembleConfig ensemble;
  std::string output_dir;
  std::string format;

  nlohmann::json ToJson() const;
  static RunConfig FromJson(const nlohmann::json& json);
};

// Train and test row indices: a seeded permutation, the first
// round(test_fraction * n) rows (at least one, at most n - 1) going to test.
struct Split {
  std::vector<size_t> train;
  std::vector<size_t> test;
};
Split SplitRows(size_t n, double test_fraction, uint64_t seed);

int RunCli(int argc, const char* const* argv, std::istream& in,
           std::ostream& out, std::ostream& err);

}  // namespace ensemblecf

#endif  // ENSEMBLECF_CLI_H_
