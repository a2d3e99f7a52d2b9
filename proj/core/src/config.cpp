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

#include "ssplanner/config.hpp"

#include <cstdlib>
#include <fstream>

#include "ssplanner/errors.hpp"

namespace ssp::config {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::apply(const std::string& assignment, const std::string& where) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw InputError("bad config entry (expected key=value) in " + where + ": " + assignment);
  }
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  if (key.empty()) throw InputError("empty config key in " + where);
  entries_[key] = value;
}

RunConfig RunConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    cfg.apply(line, path + ":" + std::to_string(line_no));
  }
  for (const std::string& o : overrides) cfg.apply(o, "--set");
  return cfg;
}

RunConfig RunConfig::from_overrides(const std::vector<std::string>& overrides) {
  RunConfig cfg;
  for (const std::string& o : overrides) cfg.apply(o, "--set");
  return cfg;
}

bool RunConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::string RunConfig::require_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw InputError("missing required config key: " + key);
  return it->second;
}

int RunConfig::get_int(const std::string& key, int fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw InputError("config key " + key + " is not an integer: " + it->second);
  }
}

int RunConfig::require_int(const std::string& key) const {
  if (!has(key)) throw InputError("missing required config key: " + key);
  return get_int(key, 0);
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw InputError("config key " + key + " is not a number: " + it->second);
  }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw InputError("config key " + key + " is not a boolean: " + it->second);
}

uint64_t RunConfig::get_u64(const std::string& key, uint64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    size_t used = 0;
    const uint64_t v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw InputError("config key " + key + " is not an unsigned integer: " + it->second);
  }
}

trainer::TrainConfig RunConfig::train_config() const {
  trainer::TrainConfig tc;
  tc.learning_rate = get_double("learning_rate", tc.learning_rate);
  tc.grad_clip_norm = get_double("grad_clip_norm", tc.grad_clip_norm);
  tc.weight_decay = get_double("weight_decay", tc.weight_decay);
  tc.adam_beta1 = get_double("adam_beta1", tc.adam_beta1);
  tc.adam_beta2 = get_double("adam_beta2", tc.adam_beta2);
  tc.adam_eps = get_double("adam_eps", tc.adam_eps);
  tc.lambda_plan = get_double("lambda_plan", tc.lambda_plan);
  tc.lambda_next = get_double("lambda_next", tc.lambda_next);
  tc.batch_size = get_int("batch_size", tc.batch_size);
  tc.epochs = require_int("epochs");
  tc.seed = get_u64("seed", tc.seed);
  tc.extract_nkps = get_int("extract_nkps", tc.extract_nkps);
  tc.sample_nsp_negatives = get_bool("sample_nsp_negatives", tc.sample_nsp_negatives);
  tc.test_keyword_source = get_string("keyword_source", tc.test_keyword_source);
  tc.model.layers = get_int("layers", tc.model.layers);
  tc.model.heads = get_int("heads", tc.model.heads);
  tc.model.d_model = get_int("d_model", tc.model.d_model);
  tc.model.d_pos = get_int("d_pos", tc.model.d_pos);
  tc.model.max_seq = get_int("max_seq", tc.model.max_seq);
  tc.model.max_para = get_int("max_para", tc.model.max_para);
  tc.model.train_nkps = get_int("train_nkps", tc.model.train_nkps);
  tc.model.t_max = get_int("t_max", tc.model.t_max);
  tc.model.use_sentence_pos = get_bool("use_sentence_pos", tc.model.use_sentence_pos);
  return tc;
}

}  // namespace ssp::config
