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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include "cryssl/util.hpp"

using namespace cryssl;

TEST_CASE("fnv1a64 matches published vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("hex64 is fixed width") {
  CHECK(hex64(0) == "0000000000000000");
  CHECK(hex64(0xabcULL) == "0000000000000abc");
  CHECK(hex64(~0ULL) == "ffffffffffffffff");
}

TEST_CASE("derive_seed separates tags and parents") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t p = 0; p < 20; ++p)
    for (const char* tag : {"pretrain", "adapt", "finetune", "replay", ""})
      seen.insert(derive_seed(p, tag));
  CHECK(seen.size() == 100);
  CHECK(derive_seed(7, "x") == derive_seed(7, "x"));
}

TEST_CASE("text files round-trip") {
  const std::string path = "util_tmp/nested/file.txt";
  write_text_file(path, std::string("a\0b\n", 4));
  CHECK(read_text_file(path) == std::string("a\0b\n", 4));
  write_text_file(path, "second");
  CHECK(read_text_file(path) == "second");
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove_all("util_tmp");
}

TEST_CASE("mean and sample stddev") {
  std::vector<double> xs{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(mean_of(xs) == doctest::Approx(5.0));
  CHECK(sample_stddev(xs) == doctest::Approx(std::sqrt(32.0 / 7.0)));
  std::vector<double> one{1.0};
  CHECK(std::isnan(sample_stddev(one)));
}
