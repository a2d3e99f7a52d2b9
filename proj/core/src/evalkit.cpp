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

#include "ssplanner/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ssplanner/errors.hpp"

namespace ssp::evalkit {

double bleu(const std::vector<std::string>& hypothesis, const std::vector<std::string>& reference,
            int max_n) {
  if (reference.empty()) throw InputError("bleu: reference must be non-empty");
  if (max_n < 1) throw InputError("bleu: max_n must be >= 1");
  if (hypothesis.empty()) return 0.0;

  auto ngram_counts = [](const std::vector<std::string>& tokens, int n) {
    std::map<std::vector<std::string>, int> counts;
    if (static_cast<int>(tokens.size()) >= n) {
      for (size_t i = 0; i + n <= tokens.size(); ++i) {
        counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)] += 1;
      }
    }
    return counts;
  };

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto hyp_counts = ngram_counts(hypothesis, n);
    const auto ref_counts = ngram_counts(reference, n);
    int match = 0;
    int total = std::max(0, static_cast<int>(hypothesis.size()) - n + 1);
    for (const auto& [gram, count] : hyp_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) match += std::min(count, it->second);
    }
    if (n >= 2) {
      match += 1;
      total += 1;
    }
    if (total == 0 || match == 0) return 0.0;
    log_sum += std::log(static_cast<double>(match) / total);
  }
  const double bp = std::exp(std::min(
      0.0, 1.0 - static_cast<double>(reference.size()) / static_cast<double>(hypothesis.size())));
  return bp * std::exp(log_sum / max_n);
}

EmbeddingLookup model_embedding_lookup(const planner::Model& model) {
  const planner::Model* m = &model;
  return [m](const std::string& token) {
    const int id = m->vocab().id_of(token);
    const Tensor& emb = m->params().tok_emb;
    std::vector<double> row(emb.cols);
    for (int j = 0; j < emb.cols; ++j) row[j] = emb.at(id, j);
    return row;
  };
}

namespace {

std::vector<double> extrema_vector(const std::vector<std::string>& tokens,
                                   const EmbeddingLookup& embeddings) {
  std::vector<double> out;
  for (const std::string& token : tokens) {
    const std::vector<double> v = embeddings(token);
    if (out.empty()) {
      out.assign(v.size(), 0.0);
    } else if (v.size() != out.size()) {
      throw InputError("vector_extrema: inconsistent embedding dimensions");
    }
    for (size_t d = 0; d < v.size(); ++d) {
      // Keep the value of maximum magnitude; ties prefer the larger signed
      // value so the result is order-independent.
      const double cur = out[d];
      if (std::fabs(v[d]) > std::fabs(cur) ||
          (std::fabs(v[d]) == std::fabs(cur) && v[d] > cur)) {
        out[d] = v[d];
      }
    }
  }
  return out;
}

}  // namespace

double vector_extrema(const std::vector<std::string>& hypothesis,
                      const std::vector<std::string>& reference,
                      const EmbeddingLookup& embeddings) {
  const std::vector<double> h = extrema_vector(hypothesis, embeddings);
  const std::vector<double> r = extrema_vector(reference, embeddings);
  if (h.empty() || r.empty()) return 0.0;
  if (h.size() != r.size()) throw InputError("vector_extrema: dimension mismatch");
  double dot = 0.0, nh = 0.0, nr = 0.0;
  for (size_t d = 0; d < h.size(); ++d) {
    dot += h[d] * r[d];
    nh += h[d] * h[d];
    nr += r[d] * r[d];
  }
  if (nh == 0.0 || nr == 0.0) return 0.0;
  return dot / (std::sqrt(nh) * std::sqrt(nr));
}

double nsp_accuracy(const planner::Model& model,
                    const std::vector<parcom::MaskedInstance>& instances) {
  if (instances.empty()) throw InputError("nsp_accuracy: empty instance set");
  int correct = 0;
  for (const parcom::MaskedInstance& inst : instances) {
    const planner::EncodedInstance enc =
        planner::encode_instance(inst, model.vocab(), model.config());
    const double p = model.nsp_predict(enc);
    const bool predicted_positive = p > 0.5;  // exactly 0.5 predicts negative
    if (predicted_positive == !inst.is_negative_nsp) ++correct;
  }
  return static_cast<double>(correct) / instances.size();
}

PpAccuracy pp_accuracy(const planner::Model& model,
                       const std::vector<parcom::MaskedInstance>& instances) {
  PpAccuracy out;
  double recall_sum = 0.0;
  for (const parcom::MaskedInstance& inst : instances) {
    if (inst.is_negative_nsp) continue;
    const planner::EncodedInstance enc =
        planner::encode_instance(inst, model.vocab(), model.config());
    if (enc.keyword_ids.empty()) {
      ++out.skipped_empty;
      continue;
    }
    const std::set<int> gold(enc.keyword_ids.begin(), enc.keyword_ids.end());
    const int p = std::min(model.config().train_nkps * static_cast<int>(inst.target.size()),
                           model.config().vocab_size - corpus::kNumSpecials);
    const planner::PlanPrediction pred = model.predict_plan(enc, p);
    int hits = 0;
    for (const auto& [id, prob] : pred.top_keywords) {
      if (gold.count(id) > 0) ++hits;
    }
    recall_sum += static_cast<double>(hits) / gold.size();
    ++out.evaluated;
  }
  if (out.evaluated > 0) out.accuracy = recall_sum / out.evaluated;
  return out;
}

double keyword_usage_rate(const std::vector<std::vector<std::string>>& generated_sentences,
                          const std::vector<std::string>& keywords) {
  if (keywords.empty()) throw InputError("keyword_usage_rate: empty keyword set");
  std::set<std::string> distinct(keywords.begin(), keywords.end());
  std::set<std::string> generated;
  for (const auto& sentence : generated_sentences) {
    generated.insert(sentence.begin(), sentence.end());
  }
  int used = 0;
  for (const std::string& kw : distinct) {
    if (generated.count(kw) > 0) ++used;
  }
  return static_cast<double>(used) / distinct.size();
}

std::string completion_to_jsonl(const Completion& completion) {
  nlohmann::json j;
  j["id"] = completion.id;
  j["keywords_used"] = completion.keywords_used;
  j["generated"] = completion.generated;
  return j.dump();
}

Completion completion_from_jsonl(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("completion line is not valid JSON: ") + e.what());
  }
  Completion c;
  try {
    c.id = j.at("id").get<std::string>();
    c.keywords_used = j.at("keywords_used").get<std::vector<std::string>>();
    c.generated = j.at("generated").get<std::vector<std::vector<std::string>>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("completion line missing fields: ") + e.what());
  }
  return c;
}

void write_completions(const std::vector<Completion>& completions, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path);
  for (const Completion& c : completions) out << completion_to_jsonl(c) << '\n';
  if (!out) throw InputError("write failed: " + path);
}

std::vector<Completion> read_completions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open completions: " + path);
  std::vector<Completion> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(completion_from_jsonl(line));
  }
  return out;
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["bleu"] = bleu;
  j["vector_extrema"] = vector_extrema;
  j["nsp_accuracy"] = nsp_accuracy;
  j["pp_accuracy"] = pp_accuracy;
  j["keyword_usage_rate"] = keyword_usage_rate;
  j["counts"] = {{"references", references},
                 {"completions", completions},
                 {"generation_evaluated", generation_evaluated},
                 {"pp_evaluated", pp_evaluated},
                 {"pp_skipped_empty", pp_skipped_empty}};
  return j.dump();
}

std::string MetricReport::to_table() const {
  std::ostringstream out;
  auto line = [&](const char* name, double v) {
    out << name;
    for (size_t i = std::string(name).size(); i < 22; ++i) out << ' ';
    out << v << "\n";
  };
  line("bleu", bleu);
  line("vector_extrema", vector_extrema);
  line("nsp_accuracy", nsp_accuracy);
  line("pp_accuracy", pp_accuracy);
  line("keyword_usage_rate", keyword_usage_rate);
  out << "generation_evaluated  " << generation_evaluated << "\n";
  out << "pp_evaluated          " << pp_evaluated << " (skipped_empty=" << pp_skipped_empty
      << ")\n";
  return out.str();
}

MetricReport evaluate_completions(const planner::Model& model,
                                  const std::vector<parcom::MaskedInstance>& references,
                                  const std::vector<Completion>& completions) {
  std::map<std::string, const parcom::MaskedInstance*> by_id;
  for (const parcom::MaskedInstance& inst : references) {
    by_id[parcom::instance_id(inst)] = &inst;
  }
  std::set<std::string> completion_ids;
  for (const Completion& c : completions) {
    if (by_id.find(c.id) == by_id.end()) {
      throw AlignmentError("completion id not present in references: " + c.id);
    }
    completion_ids.insert(c.id);
  }
  for (const auto& [id, inst] : by_id) {
    if (completion_ids.find(id) == completion_ids.end()) {
      throw AlignmentError("reference id missing from completions: " + id);
    }
  }

  MetricReport report;
  report.references = static_cast<int>(references.size());
  report.completions = static_cast<int>(completions.size());

  const EmbeddingLookup embed = model_embedding_lookup(model);
  double bleu_sum = 0.0, ve_sum = 0.0;
  double usage_used = 0.0, usage_total = 0.0;

  // Deterministic order: sort completions by id.
  std::vector<const Completion*> ordered;
  ordered.reserve(completions.size());
  for (const Completion& c : completions) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(),
            [](const Completion* a, const Completion* b) { return a->id < b->id; });

  for (const Completion* c : ordered) {
    const parcom::MaskedInstance& ref = *by_id.at(c->id);
    if (ref.is_negative_nsp) continue;  // generation scored on true targets only
    std::vector<std::string> hyp, gold;
    for (const auto& s : c->generated) hyp.insert(hyp.end(), s.begin(), s.end());
    for (const auto& ps : ref.target) {
      gold.insert(gold.end(), ps.sentence.tokens.begin(), ps.sentence.tokens.end());
    }
    bleu_sum += bleu(hyp, gold);
    ve_sum += vector_extrema(hyp, gold, embed);
    if (!c->keywords_used.empty()) {
      std::set<std::string> distinct(c->keywords_used.begin(), c->keywords_used.end());
      std::set<std::string> generated;
      for (const auto& s : c->generated) generated.insert(s.begin(), s.end());
      for (const std::string& kw : distinct) {
        if (generated.count(kw) > 0) usage_used += 1.0;
      }
      usage_total += static_cast<double>(distinct.size());
    }
    ++report.generation_evaluated;
  }
  if (report.generation_evaluated > 0) {
    report.bleu = bleu_sum / report.generation_evaluated;
    report.vector_extrema = ve_sum / report.generation_evaluated;
  }
  if (usage_total > 0.0) report.keyword_usage_rate = usage_used / usage_total;

  report.nsp_accuracy = nsp_accuracy(model, references);
  const PpAccuracy pp = pp_accuracy(model, references);
  report.pp_accuracy = pp.accuracy;
  report.pp_evaluated = pp.evaluated;
  report.pp_skipped_empty = pp.skipped_empty;
  return report;
}

}  // namespace ssp::evalkit
