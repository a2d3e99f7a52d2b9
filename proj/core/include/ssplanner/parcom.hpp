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
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ssplanner/corpus.hpp"
#include "ssplanner/planex.hpp"

namespace ssp::parcom {

// A contiguous mask of t sentences starting at `start`, valid for paragraphs
// where the remaining context stays strictly larger than the mask (c > t).
struct MaskSpec {
  int start = 0;
  int t = 1;

  bool operator==(const MaskSpec&) const = default;
};

struct PositionedSentence {
  int pos = 0;  // original position within the paragraph
  corpus::Sentence sentence;
};

struct MaskedInstance {
  std::string doc_id;
  int para_index = 0;
  std::vector<PositionedSentence> context;  // original order, mask removed
  std::vector<PositionedSentence> target;   // contiguous original positions
  planex::KeywordPlan plan;
  int paragraph_len = 0;
  bool is_negative_nsp = false;
};

// All (start, t) with 1 <= t <= t_max, l - t > t, 0 <= start <= l - t,
// ordered by (t, start).
std::vector<MaskSpec> enumerate_masks(int paragraph_len, int t_max);

MaskedInstance make_instance(const corpus::Paragraph& paragraph, const MaskSpec& spec,
                             planex::KeywordPlan plan);

// Re-extracts the plan for a replacement target span; absent, the negative
// keeps an empty plan.
using PlanExtractor = std::function<planex::KeywordPlan(const std::vector<corpus::Sentence>&)>;

// Replaces the target span of a uniformly chosen half of the instances with an
// equal-length contiguous span from a different paragraph and flags them.
std::vector<MaskedInstance> make_nsp_negatives(std::vector<MaskedInstance> instances,
                                               uint64_t rng_seed,
                                               const PlanExtractor& plan_extractor = nullptr);

// Stable instance identity used to align completions with references.
std::string instance_id(const MaskedInstance& instance);

// JSON Lines dataset format:
// {doc_id, para_index, context:[{pos,tokens}], target:[{pos,tokens}],
//  plan:{per_sentence:[[...]], flat:[...]}, negative:bool}
std::string instance_to_jsonl(const MaskedInstance& instance);
MaskedInstance instance_from_jsonl(const std::string& line);

void write_instances(const std::vector<MaskedInstance>& instances, const std::string& path);
std::vector<MaskedInstance> read_instances(const std::string& path);

}  // namespace ssp::parcom
