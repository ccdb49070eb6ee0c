// Copyright 2026 The cryssl Authors
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

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cryssl {

// Every stochastic routine takes one of these explicitly; there is no
// global generator.
using Rng = std::mt19937_64;

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text);

// Fixed-width lowercase hex.
std::string hex64(std::uint64_t v);

// Derives an independent child seed from a parent seed and a tag.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag);

// Writes `text` to `path` atomically (temp file + rename).
void write_text_file(const std::string& path, std::string_view text);
std::string read_text_file(const std::string& path);

// Sample mean and sample standard deviation (n-1 denominator).
double mean_of(std::span<const double> xs);
double sample_stddev(std::span<const double> xs);

}  // namespace cryssl
