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

#include <functional>
#include <string>
#include <vector>

#include "ssplanner/parcom.hpp"
#include "ssplanner/planner.hpp"

namespace ssp::evalkit {

// Sentence-level BLEU: geometric mean of modified n-gram precisions with
// add-one smoothing on numerator and denominator for n >= 2, times the
// brevity penalty exp(min(0, 1 - |ref|/|hyp|)). Empty hypothesis scores 0.
double bleu(const std::vector<std::string>& hypothesis, const std::vector<std::string>& reference,
            int max_n = 4);

using EmbeddingLookup = std::function<std::vector<double>(const std::string&)>;

// Token-embedding rows of the model; OOV tokens fall back to the UNK row.
EmbeddingLookup model_embedding_lookup(const planner::Model& model);

// Per dimension keep the value of maximum magnitude across the sentence
// (ties prefer the larger signed value), then cosine of the two extrema
// vectors. A zero extrema vector scores 0.
double vector_extrema(const std::vector<std::string>& hypothesis,
                      const std::vector<std::string>& reference,
                      const EmbeddingLookup& embeddings);

// Fraction of instances where (p-hat > 0.5) matches the positive label;
// p-hat of exactly 0.5 counts as predicting negative.
double nsp_accuracy(const planner::Model& model,
                    const std::vector<parcom::MaskedInstance>& instances);

struct PpAccuracy {
  double accuracy = 0.0;
  int evaluated = 0;
  int skipped_empty = 0;
};

// Mean recall of gold plan keywords within the model's top-p predictions
// (p = train_nkps * t); instances with empty gold plans are skipped.
PpAccuracy pp_accuracy(const planner::Model& model,
                       const std::vector<parcom::MaskedInstance>& instances);

// Fraction of distinct plan keywords appearing anywhere in the generated
// target sentences.
double keyword_usage_rate(const std::vector<std::vector<std::string>>& generated_sentences,
                          const std::vector<std::string>& keywords);

struct Completion {
  std::string id;
  std::vector<std::string> keywords_used;
  std::vector<std::vector<std::string>> generated;
};

std::string completion_to_jsonl(const Completion& completion);
Completion completion_from_jsonl(const std::string& line);
void write_completions(const std::vector<Completion>& completions, const std::string& path);
std::vector<Completion> read_completions(const std::string& path);

struct MetricReport {
  double bleu = 0.0;
  double vector_extrema = 0.0;
  double nsp_accuracy = 0.0;
  double pp_accuracy = 0.0;
  double keyword_usage_rate = 0.0;
  int references = 0;
  int completions = 0;
  int generation_evaluated = 0;  // non-negative instances scored by BLEU/VE
  int pp_evaluated = 0;
  int pp_skipped_empty = 0;

  std::string to_json() const;
  std::string to_table() const;  // fixed-order human-readable block
};

// Joins completions to references by instance id (exact bijection required),
// scores generation on non-negative instances, and adds the module
// accuracies.
MetricReport evaluate_completions(const planner::Model& model,
                                  const std::vector<parcom::MaskedInstance>& references,
                                  const std::vector<Completion>& completions);

}  // namespace ssp::evalkit
