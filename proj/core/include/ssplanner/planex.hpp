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
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssplanner/corpus.hpp"

namespace ssp::parcom {
struct MaskedInstance;
}
namespace ssp::planner {
class Model;
}

namespace ssp::planex {

using Stopwords = std::set<std::string>;

Stopwords load_stopwords(const std::string& path);
Stopwords builtin_test_stopwords();  // tiny list for tests without fixtures

struct ScoredWord {
  std::string token;
  double score = 0.0;
};

// Plan keywords for one masked instance. per_sentence[i] holds at most nkps
// unigrams for target sentence i; flat is the shuffled deduplicated union.
struct KeywordPlan {
  std::vector<std::vector<std::string>> per_sentence;
  std::vector<std::string> flat;
  int nkps = 0;

  bool empty() const;
};

// Frequency/position scoring: score(w) = tf(w) / (1 + first_position(w)/len).
std::vector<std::string> extract_statistical(const corpus::Sentence& sentence, int k,
                                             const Stopwords& stopwords);

// Word-degree scoring over maximal non-stopword runs: score(w) = degree/freq.
std::vector<std::string> extract_graph_rake(const corpus::Sentence& sentence, int k,
                                            const Stopwords& stopwords);

// Personalized PageRank over a window-2 co-occurrence graph with a restart
// vector proportional to 1/(position+1).
std::vector<std::string> extract_positionrank(const corpus::Sentence& sentence, int k,
                                              const Stopwords& stopwords, double damping = 0.85,
                                              double tol = 1e-6);

// Numeric core of extract_positionrank: power iteration of the personalized
// PageRank update until the L1 change drops below tol. weights is the
// symmetric co-occurrence matrix; restart must sum to 1. Dangling mass
// teleports through the restart vector.
std::vector<double> positionrank_power_iteration(const std::vector<std::vector<double>>& weights,
                                                 const std::vector<double>& restart,
                                                 double damping, double tol);

// Words with their stationary ranks, before the top-k cut.
std::vector<ScoredWord> positionrank_scores(const corpus::Sentence& sentence,
                                            const Stopwords& stopwords, double damping = 0.85,
                                            double tol = 1e-6);

// Keeps words backed by at least two of the three lists first, then backfills
// by best mean rank.
std::vector<std::string> vote_offtheshelf(const std::vector<std::vector<std::string>>& outputs,
                                          int k);

// Convenience wrapper: statistical + RAKE + PositionRank, then majority vote.
std::vector<std::string> extract_offtheshelf(const corpus::Sentence& sentence, int k,
                                             const Stopwords& stopwords);

enum class PosTag { kNoun, kVerb, kAdj, kAdv, kPron, kDet, kAdp, kNum, kPunct, kConj, kOther };

PosTag parse_tag(const std::string& name);
const char* tag_name(PosTag tag);

enum class SyntacticMode { kNoun, kVerb, kNounVerb };

// Tokens whose tag matches the mode, in sentence order, capped at k.
std::vector<std::string> extract_syntactic(const corpus::Sentence& sentence,
                                           const std::vector<PosTag>& tags, SyntacticMode mode,
                                           int k);

class PosLexicon {
 public:
  PosLexicon() = default;
  static PosLexicon load(const std::string& path);  // "token tag" lines
  void add(const std::string& token, PosTag tag);
  bool lookup(const std::string& token, PosTag* tag) const;

 private:
  std::unordered_map<std::string, PosTag> entries_;
};

// Lexicon lookup with suffix fallbacks: -ed/-ing verb, digits number,
// punctuation punct, default noun.
std::vector<PosTag> tag_pos(const corpus::Sentence& sentence, const PosLexicon& lexicon);

// Context words ranked by the head-0 attention they receive from target
// tokens, averaged over layers; specials and punctuation excluded. Needs a
// trained model.
std::vector<std::string> extract_attention(const planner::Model& model,
                                           const parcom::MaskedInstance& instance, int k);

// Splits multiword candidates into unigrams, dedups and caps each sentence
// list at nkps, and builds the seeded shuffled flat union.
KeywordPlan finalize_plan(const std::vector<std::vector<std::string>>& per_sentence_keywords,
                          int nkps, uint64_t rng_seed);

}  // namespace ssp::planex
