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

#include "ssplanner/planex.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include "ssplanner/errors.hpp"
#include "ssplanner/planner.hpp"
#include "ssplanner/rng.hpp"

namespace ssp::planex {

namespace {

bool is_punct_token(const std::string& token) {
  for (unsigned char c : token) {
    if (std::isalnum(c) != 0 || c >= 0x80) return false;
  }
  return true;
}

bool is_candidate(const std::string& token, const Stopwords& stopwords) {
  return stopwords.count(token) == 0 && !is_punct_token(token);
}

// (score desc, token asc), then cap at k.
std::vector<std::string> top_k(std::vector<ScoredWord> scored, int k) {
  std::sort(scored.begin(), scored.end(), [](const ScoredWord& a, const ScoredWord& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.token < b.token;
  });
  if (static_cast<int>(scored.size()) > k) scored.resize(k);
  std::vector<std::string> out;
  out.reserve(scored.size());
  for (auto& s : scored) out.push_back(std::move(s.token));
  return out;
}

}  // namespace

bool KeywordPlan::empty() const { return flat.empty(); }

Stopwords load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open stopword file: " + path);
  Stopwords out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

Stopwords builtin_test_stopwords() {
  return {"a",  "an", "and", "at", "but", "by", "for", "in",   "is",  "it",
          "of", "on", "or",  "so", "the", "to", "was", "were", "with"};
}

std::vector<std::string> extract_statistical(const corpus::Sentence& sentence, int k,
                                             const Stopwords& stopwords) {
  if (k < 1) throw InputError("extract_statistical: k must be >= 1");
  const double len = static_cast<double>(sentence.tokens.size());
  std::map<std::string, std::pair<int, int>> stats;  // token -> (tf, first_position)
  for (int i = 0; i < static_cast<int>(sentence.tokens.size()); ++i) {
    const std::string& t = sentence.tokens[i];
    if (!is_candidate(t, stopwords)) continue;
    auto [it, inserted] = stats.emplace(t, std::make_pair(0, i));
    it->second.first += 1;
  }
  std::vector<ScoredWord> scored;
  scored.reserve(stats.size());
  for (const auto& [token, tf_pos] : stats) {
    const double tf = tf_pos.first;
    const double first = tf_pos.second;
    scored.push_back({token, tf / (1.0 + first / len)});
  }
  return top_k(std::move(scored), k);
}

std::vector<std::string> extract_graph_rake(const corpus::Sentence& sentence, int k,
                                            const Stopwords& stopwords) {
  if (k < 1) throw InputError("extract_graph_rake: k must be >= 1");
  // Maximal runs of candidate tokens form phrases; stopwords and punctuation
  // break runs.
  std::vector<std::vector<std::string>> phrases;
  std::vector<std::string> current;
  for (const std::string& t : sentence.tokens) {
    if (is_candidate(t, stopwords)) {
      current.push_back(t);
    } else if (!current.empty()) {
      phrases.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) phrases.push_back(std::move(current));

  std::map<std::string, std::pair<int, int>> stats;  // token -> (degree, freq)
  for (const auto& phrase : phrases) {
    for (const std::string& t : phrase) {
      auto& [degree, freq] = stats[t];
      degree += static_cast<int>(phrase.size());  // co-occurrence with every phrase word, self included
      freq += 1;
    }
  }
  std::vector<ScoredWord> scored;
  scored.reserve(stats.size());
  for (const auto& [token, deg_freq] : stats) {
    scored.push_back({token, static_cast<double>(deg_freq.first) / deg_freq.second});
  }
  return top_k(std::move(scored), k);
}

std::vector<double> positionrank_power_iteration(const std::vector<std::vector<double>>& weights,
                                                 const std::vector<double>& restart,
                                                 double damping, double tol) {
  if (damping <= 0.0 || damping >= 1.0) throw InputError("positionrank: damping in (0,1)");
  if (tol <= 0.0) throw InputError("positionrank: tol must be > 0");
  const int n = static_cast<int>(restart.size());
  if (static_cast<int>(weights.size()) != n) throw InputError("positionrank: shape mismatch");

  std::vector<double> out_weight(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out_weight[i] += weights[i][j];
  }

  std::vector<double> rank = restart;
  std::vector<double> next(n, 0.0);
  for (int iter = 0; iter < 1000; ++iter) {
    double dangling = 0.0;
    for (int i = 0; i < n; ++i) {
      if (out_weight[i] == 0.0) dangling += rank[i];
    }
    for (int j = 0; j < n; ++j) {
      double flow = 0.0;
      for (int i = 0; i < n; ++i) {
        if (out_weight[i] > 0.0) flow += rank[i] * weights[i][j] / out_weight[i];
      }
      // Dangling mass restarts like the teleport term.
      next[j] = (1.0 - damping) * restart[j] + damping * (flow + dangling * restart[j]);
    }
    double delta = 0.0;
    for (int j = 0; j < n; ++j) delta += std::fabs(next[j] - rank[j]);
    rank.swap(next);
    if (delta < tol) break;
  }
  return rank;
}

std::vector<ScoredWord> positionrank_scores(const corpus::Sentence& sentence,
                                            const Stopwords& stopwords, double damping,
                                            double tol) {
  // Distinct candidate words, first-seen order; occurrences keep original
  // token positions.
  std::vector<std::string> words;
  std::map<std::string, int> index;
  std::vector<std::vector<int>> positions;
  for (int i = 0; i < static_cast<int>(sentence.tokens.size()); ++i) {
    const std::string& t = sentence.tokens[i];
    if (!is_candidate(t, stopwords)) continue;
    auto it = index.find(t);
    if (it == index.end()) {
      index.emplace(t, static_cast<int>(words.size()));
      words.push_back(t);
      positions.push_back({i});
    } else {
      positions[it->second].push_back(i);
    }
  }
  const int n = static_cast<int>(words.size());
  if (n == 0) return {};

  // Window-2 co-occurrence: candidate occurrences within two token positions.
  std::vector<std::vector<double>> weight(n, std::vector<double>(n, 0.0));
  {
    std::vector<std::pair<int, int>> occ;  // (position, word index)
    for (int w = 0; w < n; ++w) {
      for (int p : positions[w]) occ.emplace_back(p, w);
    }
    std::sort(occ.begin(), occ.end());
    for (size_t a = 0; a < occ.size(); ++a) {
      for (size_t b = a + 1; b < occ.size(); ++b) {
        if (occ[b].first - occ[a].first > 2) break;
        if (occ[a].second == occ[b].second) continue;
        weight[occ[a].second][occ[b].second] += 1.0;
        weight[occ[b].second][occ[a].second] += 1.0;
      }
    }
  }

  std::vector<double> restart(n, 0.0);
  double restart_sum = 0.0;
  for (int w = 0; w < n; ++w) {
    for (int p : positions[w]) restart[w] += 1.0 / (p + 1.0);
    restart_sum += restart[w];
  }
  for (double& r : restart) r /= restart_sum;

  const std::vector<double> rank = positionrank_power_iteration(weight, restart, damping, tol);
  std::vector<ScoredWord> scored;
  scored.reserve(n);
  for (int w = 0; w < n; ++w) scored.push_back({words[w], rank[w]});
  return scored;
}

std::vector<std::string> extract_positionrank(const corpus::Sentence& sentence, int k,
                                              const Stopwords& stopwords, double damping,
                                              double tol) {
  if (k < 1) throw InputError("extract_positionrank: k must be >= 1");
  return top_k(positionrank_scores(sentence, stopwords, damping, tol), k);
}

std::vector<std::string> vote_offtheshelf(const std::vector<std::vector<std::string>>& outputs,
                                          int k) {
  if (outputs.size() != 3) throw InputError("vote_offtheshelf: expected three extractor outputs");
  struct Entry {
    int appearances = 0;
    double rank_sum = 0.0;  // 1-based ranks in the lists that contain the word
    double mean_rank() const { return rank_sum / appearances; }
  };
  std::map<std::string, Entry> entries;
  for (const auto& list : outputs) {
    for (int r = 0; r < static_cast<int>(list.size()); ++r) {
      Entry& e = entries[list[r]];
      e.appearances += 1;
      e.rank_sum += r + 1;
    }
  }
  std::vector<std::pair<std::string, Entry>> ranked(entries.begin(), entries.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.appearances != b.second.appearances)
      return a.second.appearances > b.second.appearances;
    if (a.second.mean_rank() != b.second.mean_rank())
      return a.second.mean_rank() < b.second.mean_rank();
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (auto& [token, entry] : ranked) {
    if (static_cast<int>(out.size()) >= k) break;
    out.push_back(token);
  }
  return out;
}

std::vector<std::string> extract_offtheshelf(const corpus::Sentence& sentence, int k,
                                             const Stopwords& stopwords) {
  return vote_offtheshelf(
      {extract_statistical(sentence, k, stopwords), extract_graph_rake(sentence, k, stopwords),
       extract_positionrank(sentence, k, stopwords)},
      k);
}

PosTag parse_tag(const std::string& name) {
  if (name == "noun") return PosTag::kNoun;
  if (name == "verb") return PosTag::kVerb;
  if (name == "adj") return PosTag::kAdj;
  if (name == "adv") return PosTag::kAdv;
  if (name == "pron") return PosTag::kPron;
  if (name == "det") return PosTag::kDet;
  if (name == "adp") return PosTag::kAdp;
  if (name == "num") return PosTag::kNum;
  if (name == "punct") return PosTag::kPunct;
  if (name == "conj") return PosTag::kConj;
  if (name == "other") return PosTag::kOther;
  throw InputError("unknown PoS tag: " + name);
}

const char* tag_name(PosTag tag) {
  switch (tag) {
    case PosTag::kNoun: return "noun";
    case PosTag::kVerb: return "verb";
    case PosTag::kAdj: return "adj";
    case PosTag::kAdv: return "adv";
    case PosTag::kPron: return "pron";
    case PosTag::kDet: return "det";
    case PosTag::kAdp: return "adp";
    case PosTag::kNum: return "num";
    case PosTag::kPunct: return "punct";
    case PosTag::kConj: return "conj";
    case PosTag::kOther: return "other";
  }
  return "other";
}

std::vector<std::string> extract_syntactic(const corpus::Sentence& sentence,
                                           const std::vector<PosTag>& tags, SyntacticMode mode,
                                           int k) {
  if (tags.size() != sentence.tokens.size()) {
    throw InputError("extract_syntactic: tag count does not match token count");
  }
  std::vector<std::string> out;
  for (size_t i = 0; i < tags.size(); ++i) {
    if (static_cast<int>(out.size()) >= k) break;
    const bool want_noun = mode == SyntacticMode::kNoun || mode == SyntacticMode::kNounVerb;
    const bool want_verb = mode == SyntacticMode::kVerb || mode == SyntacticMode::kNounVerb;
    if ((want_noun && tags[i] == PosTag::kNoun) || (want_verb && tags[i] == PosTag::kVerb)) {
      out.push_back(sentence.tokens[i]);
    }
  }
  return out;
}

PosLexicon PosLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open PoS lexicon: " + path);
  PosLexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    const size_t space = line.find(' ');
    if (space == std::string::npos) throw InputError("bad lexicon line: " + line);
    lex.add(line.substr(0, space), parse_tag(line.substr(space + 1)));
  }
  return lex;
}

void PosLexicon::add(const std::string& token, PosTag tag) { entries_[token] = tag; }

bool PosLexicon::lookup(const std::string& token, PosTag* tag) const {
  auto it = entries_.find(token);
  if (it == entries_.end()) return false;
  *tag = it->second;
  return true;
}

std::vector<PosTag> tag_pos(const corpus::Sentence& sentence, const PosLexicon& lexicon) {
  std::vector<PosTag> tags;
  tags.reserve(sentence.tokens.size());
  for (const std::string& t : sentence.tokens) {
    PosTag tag;
    if (lexicon.lookup(t, &tag)) {
      tags.push_back(tag);
      continue;
    }
    if (is_punct_token(t)) {
      tags.push_back(PosTag::kPunct);
      continue;
    }
    bool all_digits = true;
    for (unsigned char c : t) {
      if (std::isdigit(c) == 0) {
        all_digits = false;
        break;
      }
    }
    if (all_digits) {
      tags.push_back(PosTag::kNum);
      continue;
    }
    if (t.size() > 2 && (t.ends_with("ed") || t.ends_with("ing"))) {
      tags.push_back(PosTag::kVerb);
      continue;
    }
    tags.push_back(PosTag::kNoun);  // -s fallback and default both land here
  }
  return tags;
}

std::vector<std::string> extract_attention(const planner::Model& model,
                                           const parcom::MaskedInstance& instance, int k) {
  if (k < 1) throw InputError("extract_attention: k must be >= 1");
  std::vector<std::string> out;
  for (const ScoredWord& sw : model.attention_received(instance)) {
    if (static_cast<int>(out.size()) >= k) break;
    out.push_back(sw.token);
  }
  return out;
}

KeywordPlan finalize_plan(const std::vector<std::vector<std::string>>& per_sentence_keywords,
                          int nkps, uint64_t rng_seed) {
  KeywordPlan plan;
  plan.nkps = nkps;
  std::vector<std::string> unioned;
  std::set<std::string> seen;
  for (const auto& candidates : per_sentence_keywords) {
    std::vector<std::string> kept;
    std::set<std::string> local;
    for (const std::string& candidate : candidates) {
      if (static_cast<int>(kept.size()) >= nkps) break;
      // Multiword candidates become individual unigrams.
      std::vector<std::string> parts;
      std::string current;
      for (char c : candidate) {
        if (std::isspace(static_cast<unsigned char>(c)) != 0) {
          if (!current.empty()) parts.push_back(std::move(current));
          current.clear();
        } else {
          current.push_back(c);
        }
      }
      if (!current.empty()) parts.push_back(std::move(current));
      for (std::string& part : parts) {
        if (static_cast<int>(kept.size()) >= nkps) break;
        if (local.insert(part).second) kept.push_back(part);
      }
    }
    for (const std::string& kw : kept) {
      if (seen.insert(kw).second) unioned.push_back(kw);
    }
    plan.per_sentence.push_back(std::move(kept));
  }
  Rng rng(rng_seed);
  rng.shuffle(unioned);
  plan.flat = std::move(unioned);
  return plan;
}

}  // namespace ssp::planex
