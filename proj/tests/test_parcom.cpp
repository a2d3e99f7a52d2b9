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

#include <algorithm>
#include <set>

#include "doctest.h"
#include "ssplanner/errors.hpp"
#include "ssplanner/parcom.hpp"
#include "testutil.hpp"

using namespace ssp;
using namespace ssp::parcom;

namespace {

// Independent oracle: try every contiguous window and keep those with more
// context than target.
int brute_force_mask_count(int l, int t_max) {
  int count = 0;
  for (int t = 1; t <= t_max; ++t) {
    for (int start = 0; start + t <= l; ++start) {
      if (l - t > t) ++count;
    }
  }
  return count;
}

}  // namespace

TEST_SUITE_BEGIN("parcom");

TEST_CASE("enumerate_masks matches the worked examples") {
  auto specs = enumerate_masks(5, 2);
  CHECK(specs.size() == 9);  // 5 singles + 4 pairs
  int singles = 0, pairs = 0;
  for (const auto& s : specs) (s.t == 1 ? singles : pairs)++;
  CHECK(singles == 5);
  CHECK(pairs == 4);

  CHECK(enumerate_masks(4, 3).size() == 4);   // only t=1 keeps c > t
  CHECK(enumerate_masks(7, 3).size() == 18);  // 7 + 6 + 5
}

TEST_CASE("enumerate_masks is ordered by (t, start) with per-t count l - t + 1") {
  const auto specs = enumerate_masks(6, 2);
  REQUIRE(specs.size() == 11);
  for (size_t i = 1; i < specs.size(); ++i) {
    const bool ordered = specs[i - 1].t < specs[i].t ||
                         (specs[i - 1].t == specs[i].t && specs[i - 1].start < specs[i].start);
    CHECK(ordered);
  }
  int t1 = 0, t2 = 0;
  for (const auto& s : specs) (s.t == 1 ? t1 : t2)++;
  CHECK(t1 == 6);
  CHECK(t2 == 5);
}

TEST_CASE("enumerate_masks equals brute force across the working range") {
  for (int l = 2; l <= 10; ++l) {
    for (int t_max = 1; t_max <= 4; ++t_max) {
      CHECK(enumerate_masks(l, t_max).size() ==
            static_cast<size_t>(brute_force_mask_count(l, t_max)));
    }
  }
  CHECK_THROWS_AS(enumerate_masks(1, 1), InputError);
  CHECK_THROWS_AS(enumerate_masks(5, 0), InputError);
}

TEST_CASE("make_instance records positions and keeps context order") {
  const auto para = ssptest::tiny_corpus(1, 5)[0];

  auto inst = make_instance(para, {2, 1}, {});
  std::vector<int> ctx_pos, tgt_pos;
  for (const auto& ps : inst.context) ctx_pos.push_back(ps.pos);
  for (const auto& ps : inst.target) tgt_pos.push_back(ps.pos);
  CHECK(ctx_pos == std::vector<int>{0, 1, 3, 4});
  CHECK(tgt_pos == std::vector<int>{2});

  auto front = make_instance(para, {0, 2}, {});
  ctx_pos.clear();
  for (const auto& ps : front.context) ctx_pos.push_back(ps.pos);
  CHECK(ctx_pos == std::vector<int>{2, 3, 4});

  CHECK_THROWS_AS(make_instance(para, {4, 2}, {}), InputError);  // start + t > l
  CHECK_THROWS_AS(make_instance(para, {0, 3}, {}), InputError);  // c would not exceed t
}

TEST_CASE("reconstruction: splicing target into context restores the paragraph") {
  for (const auto& para : ssptest::tiny_corpus(4, 6)) {
    const int l = static_cast<int>(para.sentences.size());
    for (const auto& spec : enumerate_masks(l, 3)) {
      const auto inst = make_instance(para, spec, {});
      std::vector<corpus::Sentence> rebuilt(l);
      for (const auto& ps : inst.context) rebuilt[ps.pos] = ps.sentence;
      for (const auto& ps : inst.target) rebuilt[ps.pos] = ps.sentence;
      for (int i = 0; i < l; ++i) CHECK(rebuilt[i].tokens == para.sentences[i].tokens);
    }
  }
}

TEST_CASE("make_nsp_negatives flags exactly half, deterministically") {
  // 25 paragraphs of length 4 yield exactly 100 instances.
  auto instances = ssptest::instances_for(ssptest::tiny_corpus(25, 4), 3);
  REQUIRE(instances.size() == 100);

  auto flagged = make_nsp_negatives(instances, 42);
  int negatives = 0;
  for (const auto& inst : flagged) negatives += inst.is_negative_nsp ? 1 : 0;
  CHECK(negatives == 50);

  auto again = make_nsp_negatives(instances, 42);
  REQUIRE(again.size() == flagged.size());
  for (size_t i = 0; i < flagged.size(); ++i) {
    CHECK(instance_to_jsonl(flagged[i]) == instance_to_jsonl(again[i]));
  }

  auto other_seed = make_nsp_negatives(instances, 43);
  bool any_difference = false;
  for (size_t i = 0; i < flagged.size(); ++i) {
    if (flagged[i].is_negative_nsp != other_seed[i].is_negative_nsp) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("negative targets come from a different paragraph") {
  auto paragraphs = ssptest::tiny_corpus(10, 4);
  auto instances = ssptest::instances_for(paragraphs, 1);
  auto flagged = make_nsp_negatives(instances, 7);
  for (size_t i = 0; i < flagged.size(); ++i) {
    if (!flagged[i].is_negative_nsp) continue;
    const auto& original = instances[i];
    REQUIRE(flagged[i].target.size() == original.target.size());
    bool identical = true;
    for (size_t j = 0; j < original.target.size(); ++j) {
      CHECK(flagged[i].target[j].pos == original.target[j].pos);  // mask slots unchanged
      if (flagged[i].target[j].sentence.tokens != original.target[j].sentence.tokens) {
        identical = false;
      }
    }
    CHECK_FALSE(identical);
  }
}

TEST_CASE("make_nsp_negatives refuses a single-paragraph corpus") {
  auto instances = ssptest::instances_for(ssptest::tiny_corpus(1, 5), 2);
  CHECK_THROWS_AS(make_nsp_negatives(instances, 1), InputError);
}

TEST_CASE("negative plans are re-extracted when an extractor is supplied") {
  auto instances = ssptest::instances_for(ssptest::tiny_corpus(6, 4), 1);
  const planex::Stopwords sw = planex::builtin_test_stopwords();
  auto flagged = make_nsp_negatives(instances, 9, [&](const std::vector<corpus::Sentence>& span) {
    std::vector<std::vector<std::string>> per_sentence;
    for (const auto& s : span) per_sentence.push_back(planex::extract_offtheshelf(s, 5, sw));
    return planex::finalize_plan(per_sentence, 5, 11);
  });
  for (const auto& inst : flagged) {
    if (!inst.is_negative_nsp) continue;
    // Every keyword must come from the replaced target span.
    std::set<std::string> target_tokens;
    for (const auto& ps : inst.target) {
      target_tokens.insert(ps.sentence.tokens.begin(), ps.sentence.tokens.end());
    }
    for (const auto& kw : inst.plan.flat) CHECK(target_tokens.count(kw) == 1);
  }
}

TEST_CASE("dataset JSONL round trip preserves every field") {
  auto instances = ssptest::instances_for(ssptest::tiny_corpus(3, 5), 2);
  instances = make_nsp_negatives(instances, 5);
  for (const auto& inst : instances) {
    const auto back = instance_from_jsonl(instance_to_jsonl(inst));
    CHECK(back.doc_id == inst.doc_id);
    CHECK(back.para_index == inst.para_index);
    CHECK(back.is_negative_nsp == inst.is_negative_nsp);
    CHECK(back.paragraph_len == inst.paragraph_len);
    CHECK(instance_to_jsonl(back) == instance_to_jsonl(inst));
  }
  CHECK_THROWS_AS(instance_from_jsonl("{not json"), FormatError);
  CHECK_THROWS_AS(instance_from_jsonl("{\"doc_id\":\"x\"}"), FormatError);
}

TEST_CASE("instance ids are unique within a dataset") {
  auto instances = ssptest::instances_for(ssptest::tiny_corpus(8, 5), 3);
  std::set<std::string> ids;
  for (const auto& inst : instances) ids.insert(instance_id(inst));
  CHECK(ids.size() == instances.size());
}

TEST_SUITE_END();
