// Copyright 2026 The ssplanner Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace ssp {

// Bad user input: unreadable files, malformed config, violated preconditions
// on data coming from outside the library. CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite losses or gradients. CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Corrupt or incompatible serialized artifacts (checkpoints, vocab files).
// CLI exit code 4.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Completions/references whose ids do not line up. CLI exit code 5.
class AlignmentError : public std::runtime_error {
 public:
  explicit AlignmentError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ssp
