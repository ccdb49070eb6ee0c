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

#include <stdexcept>
#include <string>

namespace cryssl {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (manifest, WAV, checkpoint, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A value violates a documented invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Tensor or matrix dimensions do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss. `diagnostic_path` names the
// checkpoint dumped at the failing step (empty if none was written).
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::string diagnostic_path)
      : Error(what), diagnostic_path_(std::move(diagnostic_path)) {}
  const std::string& diagnostic_path() const { return diagnostic_path_; }

 private:
  std::string diagnostic_path_;
};

// A pipeline stage was requested without the checkpoint it depends on.
class StageDependencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace cryssl
