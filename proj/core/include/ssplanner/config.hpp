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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssplanner/trainer.hpp"

namespace ssp::config {

// Flat key=value run configuration. '#' starts a comment; later assignments
// and --set overrides win.
class RunConfig {
 public:
  RunConfig() = default;
  static RunConfig load(const std::string& path, const std::vector<std::string>& overrides = {});
  static RunConfig from_overrides(const std::vector<std::string>& overrides);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  int require_int(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;

  // Assembled views over the flat keys.
  trainer::TrainConfig train_config() const;
  uint64_t seed() const { return get_u64("seed", 1); }
  std::string out_dir() const { return get_string("out_dir", "run"); }

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  void apply(const std::string& assignment, const std::string& where);
};

}  // namespace ssp::config
