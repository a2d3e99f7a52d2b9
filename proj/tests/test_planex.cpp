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

#include <cmath>
#include <set>

#include "doctest.h"
#include "ssplanner/errors.hpp"
#include "ssplanner/planex.hpp"
#include "testutil.hpp"

using namespace ssp;
using namespace ssp::planex;

namespace {

corpus::Sentence toks(const std::vector<std::string>& tokens) {
  corpus::Sentence s;
  s.tokens = tokens;
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("planex");

TEST_CASE("statistical extractor scores tf over discounted first position") {
  const Stopwords sw = {"the"};
  // cat: tf 2, first 1 -> 2 / (1 + 1/4) = 1.6; sat: 1 / (1 + 2/4) ~ 0.667
  CHECK(extract_statistical(toks({"the", "cat", "sat", "cat"}), 1, sw) ==
        std::vector<std::string>{"cat"});
  CHECK(extract_statistical(toks({"the", "the", "the"}), 3, sw).empty());
  // k larger than the candidate pool returns everything, best first
  auto all = extract_statistical(toks({"the", "cat", "sat", "cat"}), 10, sw);
  CHECK(all == std::vector<std::string>{"cat", "sat"});
  CHECK_THROWS_AS(extract_statistical(toks({"a"}), 0, sw), InputError);
}

TEST_CASE("statistical extractor ignores punctuation candidates") {
  const Stopwords sw = {};
  auto out = extract_statistical(toks({"cat", ".", "!", "."}), 3, sw);
  CHECK(out == std::vector<std::string>{"cat"});
}

TEST_CASE("RAKE scores degree over frequency within candidate phrases") {
  const Stopwords sw = {"the", "on"};
  // phrase [red, carpet]: degree 2 for both, freq 1 -> score 2; tie broken
  // lexicographically.
  CHECK(extract_graph_rake(toks({"the", "red", "carpet", "."}), 1, sw) ==
        std::vector<std::string>{"carpet"});
  CHECK(extract_graph_rake(toks({"the", "cat", "."}), 1, sw) ==
        std::vector<std::string>{"cat"});
  CHECK(extract_graph_rake(toks({"the", "on", "."}), 4, sw).empty());
  // Longer phrases outrank singletons: [big, red, carpet] gives degree 3.
  auto out = extract_graph_rake(toks({"big", "red", "carpet", "on", "cat"}), 4, sw);
  CHECK(out[0] == "big");
  CHECK(out[3] == "cat");
}

TEST_CASE("positionrank ranks the earlier of two disconnected words higher") {
  const Stopwords sw = {"a", "b", "c", "d"};
  // early at position 0, late at position 5; no co-occurrence within the
  // window, so rank equals the restart vector: 1/(0+1) vs 1/(5+1).
  auto scores = positionrank_scores(toks({"early", "a", "b", "c", "d", "late"}), sw);
  REQUIRE(scores.size() == 2);
  double early = 0, late = 0, total = 0;
  for (const auto& s : scores) {
    total += s.score;
    if (s.token == "early") early = s.score;
    if (s.token == "late") late = s.score;
  }
  CHECK(early == doctest::Approx(6.0 / 7.0).epsilon(1e-9));
  CHECK(late == doctest::Approx(1.0 / 7.0).epsilon(1e-9));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(extract_positionrank(toks({"early", "a", "b", "c", "d", "late"}), 1, sw) ==
        std::vector<std::string>{"early"});
}

TEST_CASE("positionrank: single word takes the whole rank") {
  const Stopwords sw = {"the"};
  auto scores = positionrank_scores(toks({"the", "cat", "the"}), sw);
  REQUIRE(scores.size() == 1);
  CHECK(scores[0].token == "cat");
  CHECK(scores[0].score == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(positionrank_scores(toks({"the", "the"}), sw).empty());
}

TEST_CASE("positionrank power iteration: symmetric triangle with uniform restart") {
  const std::vector<std::vector<double>> triangle = {
      {0, 1, 1},
      {1, 0, 1},
      {1, 1, 0},
  };
  const std::vector<double> uniform = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  auto rank = positionrank_power_iteration(triangle, uniform, 0.85, 1e-9);
  CHECK(rank[0] == doctest::Approx(rank[1]).epsilon(1e-6));
  CHECK(rank[1] == doctest::Approx(rank[2]).epsilon(1e-6));
  CHECK(rank[0] + rank[1] + rank[2] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("positionrank rank is invariant to token relabeling") {
  const Stopwords sw = {};
  auto a = positionrank_scores(toks({"alpha", "beta", "gamma", "alpha"}), sw);
  auto b = positionrank_scores(toks({"xx", "yy", "zz", "xx"}), sw);
  REQUIRE(a.size() == b.size());
  std::multiset<double> sa, sb;
  for (const auto& s : a) sa.insert(std::round(s.score * 1e12));
  for (const auto& s : b) sb.insert(std::round(s.score * 1e12));
  CHECK(sa == sb);
}

TEST_CASE("positionrank rank sums to one on busy sentences") {
  const Stopwords sw = builtin_test_stopwords();
  auto scores = positionrank_scores(
      ssptest::sent("mara carried the copper lantern back to the harbor market ."), sw);
  double total = 0;
  for (const auto& s : scores) total += s.score;
  CHECK(std::fabs(total - 1.0) <= 1e-9);
}

TEST_CASE("majority voting prefers words on two or more lists") {
  // a appears twice -> first; backfill by mean rank picks d (rank 1).
  CHECK(vote_offtheshelf({{"a", "b"}, {"a", "c"}, {"d"}}, 2) ==
        std::vector<std::string>{"a", "d"});
  // identical lists pass through unchanged
  CHECK(vote_offtheshelf({{"x", "y", "z"}, {"x", "y", "z"}, {"x", "y", "z"}}, 3) ==
        std::vector<std::string>{"x", "y", "z"});
  // three disjoint lists: best mean ranks win, ties lexicographic
  CHECK(vote_offtheshelf({{"a", "b"}, {"c", "d"}, {"e"}}, 2) ==
        std::vector<std::string>{"a", "c"});
  CHECK_THROWS_AS(vote_offtheshelf({{"a"}, {"b"}}, 2), InputError);
}

TEST_CASE("voting: any duplicated word outranks every singleton") {
  auto out = vote_offtheshelf({{"p", "q", "dup"}, {"r", "dup"}, {"s"}}, 5);
  CHECK(out[0] == "dup");
}

TEST_CASE("syntactic extraction follows the tag sequence") {
  const corpus::Sentence s =
      toks({"vigor", "dropped", "to", "one", "knee", ",", "then", "got", "up"});
  const std::vector<PosTag> tags = {PosTag::kNoun, PosTag::kVerb, PosTag::kAdp, PosTag::kNum,
                                    PosTag::kNoun, PosTag::kPunct, PosTag::kAdv, PosTag::kVerb,
                                    PosTag::kAdv};
  CHECK(extract_syntactic(s, tags, SyntacticMode::kNoun, 5) ==
        std::vector<std::string>{"vigor", "knee"});
  CHECK(extract_syntactic(s, tags, SyntacticMode::kVerb, 5) ==
        std::vector<std::string>{"dropped", "got"});
  CHECK(extract_syntactic(s, tags, SyntacticMode::kNounVerb, 3) ==
        std::vector<std::string>{"vigor", "dropped", "knee"});

  const corpus::Sentence no_verbs = toks({"quiet", "morning"});
  CHECK(extract_syntactic(no_verbs, {PosTag::kAdj, PosTag::kNoun}, SyntacticMode::kVerb, 5)
            .empty());
  CHECK_THROWS_AS(extract_syntactic(s, {PosTag::kNoun}, SyntacticMode::kNoun, 5), InputError);
}

TEST_CASE("tag_pos applies lexicon first, then suffix rules") {
  PosLexicon lex;
  lex.add("got", PosTag::kVerb);
  auto tags = tag_pos(toks({"running", ".", "12", "cats", "got", "door"}), lex);
  CHECK(tags[0] == PosTag::kVerb);   // -ing
  CHECK(tags[1] == PosTag::kPunct);
  CHECK(tags[2] == PosTag::kNum);
  CHECK(tags[3] == PosTag::kNoun);   // -s fallback
  CHECK(tags[4] == PosTag::kVerb);   // lexicon
  CHECK(tags[5] == PosTag::kNoun);   // default

  // lexicon entry overrides the suffix rule
  lex.add("running", PosTag::kNoun);
  CHECK(tag_pos(toks({"running"}), lex)[0] == PosTag::kNoun);
}

TEST_CASE("bundled lexicon and stopwords load") {
  const auto lex = PosLexicon::load(ssptest::data_dir() + "/pos_lexicon.txt");
  PosTag t;
  REQUIRE(lex.lookup("got", &t));
  CHECK(t == PosTag::kVerb);
  const auto sw = load_stopwords(ssptest::data_dir() + "/stopwords.txt");
  CHECK(sw.count("the") == 1);
  CHECK(sw.size() >= 120);
  CHECK_THROWS_AS(load_stopwords("/nonexistent/stopwords"), InputError);
}

TEST_CASE("finalize_plan splits multiword candidates into unigrams") {
  auto plan = finalize_plan({{"new york", "harbor"}}, 5, 1);
  CHECK(plan.per_sentence[0] == std::vector<std::string>{"new", "york", "harbor"});
  std::set<std::string> flat(plan.flat.begin(), plan.flat.end());
  CHECK(flat == std::set<std::string>{"new", "york", "harbor"});
}

TEST_CASE("finalize_plan caps each sentence list at nkps") {
  auto plan = finalize_plan({{"a", "b", "c", "d", "e", "f", "g"}}, 5, 1);
  CHECK(plan.per_sentence[0].size() == 5);
  CHECK(plan.flat.size() == 5);
}

TEST_CASE("finalize_plan shuffles deterministically and dedups the union") {
  const std::vector<std::vector<std::string>> lists = {{"alpha", "beta"}, {"beta", "gamma"}};
  auto p1 = finalize_plan(lists, 5, 99);
  auto p2 = finalize_plan(lists, 99, 99);
  p2.nkps = p1.nkps;
  CHECK(p1.flat == finalize_plan(lists, 5, 99).flat);  // same seed, same order

  std::set<std::string> unique(p1.flat.begin(), p1.flat.end());
  CHECK(unique.size() == p1.flat.size());
  CHECK(unique == std::set<std::string>{"alpha", "beta", "gamma"});

  bool seeds_differ = false;
  for (uint64_t seed = 0; seed < 20 && !seeds_differ; ++seed) {
    if (finalize_plan(lists, 5, seed).flat != p1.flat) seeds_differ = true;
  }
  CHECK(seeds_differ);
}

TEST_CASE("offtheshelf wrapper emits only words from the sentence") {
  const Stopwords sw = builtin_test_stopwords();
  const auto s = ssptest::sent("mara carried the copper lantern back to the harbor .");
  const auto out = extract_offtheshelf(s, 5, sw);
  CHECK_FALSE(out.empty());
  const std::set<std::string> in_sentence(s.tokens.begin(), s.tokens.end());
  for (const auto& kw : out) CHECK(in_sentence.count(kw) == 1);
}

TEST_SUITE_END();
