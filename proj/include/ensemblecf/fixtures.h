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

// Synthetic labeled datasets shaped like common benchmark sets. All of them
// are deterministic for a given seed and build.

#ifndef ENSEMBLECF_FIXTURES_H_
#define ENSEMBLECF_FIXTURES_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ensemblecf/schema.h"

namespace ensemblecf {

// Two Gaussian blobs in 6 continuous dimensions plus 2 categorical features;
// one continuous and one categorical feature are not actionable.
Dataset BlobFixture(uint64_t seed = 17, size_t n = 400);

// Credit-scoring shaped table: 7 continuous and 13 categorical features,
// age, personal status and foreign worker not actionable.
Dataset GermanFixture(uint64_t seed = 17, size_t n = 1000);

// 24-point daily profiles; the class decides whether the peak comes in the
// morning or in the evening.
Dataset SeriesFixture(uint64_t seed = 17, size_t n = 400);

// 8x8 images of horizontal (class 0) or vertical (class 1) bars.
Dataset ImageFixture(uint64_t seed = 17, size_t n = 200);

// "blobs", "german", "series", "image".
std::vector<std::string> FixtureNames();
// Throws ConfigError on unknown names.
Dataset MakeFixture(const std::string& name, uint64_t seed = 17);

}  // namespace ensemblecf

#endif  // ENSEMBLECF_FIXTURES_H_
