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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ssplanner/parcom.hpp"
#include "ssplanner/planner.hpp"

namespace ssp::trainer {

struct TrainConfig {
  double learning_rate = 2e-4;
  double grad_clip_norm = 1.0;
  double weight_decay = 0.02;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double lambda_plan = 1.0;
  double lambda_next = 0.5;
  int batch_size = 8;
  int epochs = 0;  // required, no default
  uint64_t seed = 1;
  int extract_nkps = 5;
  bool sample_nsp_negatives = true;           // false under the NSP ablation
  std::string test_keyword_source = "predicted";  // "random" under the PP ablation
  planner::ModelConfig model;

  void validate() const;
};

enum class AblateModule { kSentencePosition, kPlanPrediction, kNextSentencePrediction };
AblateModule parse_ablate_module(const std::string& name);  // "SP" | "PP" | "NSP"

// SP: sentence position embeddings pinned to zero. PP: lambda_plan = 0 and
// random test-time keywords. NSP: lambda_next = 0 and no negative sampling.
TrainConfig ablate(TrainConfig config, AblateModule module);

struct EpochStats {
  double plan = 0.0;   // mean per full instance
  double nsp = 0.0;    // mean per instance
  double gen = 0.0;    // summed objective, mean per full instance
  double gen_per_token = 0.0;
  double total = 0.0;  // mean weighted objective per instance
  int instances = 0;
  int gen_steps = 0;
};

struct TrainReport {
  std::vector<EpochStats> train_history;
  std::vector<double> valid_total_history;
  EpochStats final_train;  // recomputed with the final parameters
  EpochStats final_valid;
  int best_epoch = -1;     // by validation total loss
  double wall_seconds = 0.0;
  bool aborted = false;
  std::string abort_reason;
  std::vector<double> step_total_losses;  // per optimizer step, not serialized

  std::string to_json() const;
};

struct TrainResult {
  planner::Model model;  // best validation checkpoint
  TrainReport report;
};

// Adam with global-norm gradient clipping and decoupled weight decay
// (update = adam step + lr * wd * param).
class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double beta1, double beta2, double eps, double weight_decay);
  void step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads,
            double clip_norm);
  int steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  int t_ = 0;
  std::vector<Tensor> m_, v_;
};

TrainResult train(const TrainConfig& config, const corpus::Vocabulary& vocab,
                  const std::vector<parcom::MaskedInstance>& train_set,
                  const std::vector<parcom::MaskedInstance>& valid_set,
                  std::ostream* progress = nullptr);

// Loss components over a dataset with the given weights; no parameter updates.
EpochStats validate(const planner::Model& model,
                    const std::vector<parcom::MaskedInstance>& instances, double lambda_plan,
                    double lambda_next);

struct ValidationRecord {
  EpochStats losses;
  double bleu = 0.0;            // greedy decodes vs gold targets, positives only
  double vector_extrema = 0.0;
  double nsp_accuracy = 0.0;
  double pp_accuracy = 0.0;
  double keyword_usage_rate = 0.0;
  int decoded_instances = 0;
};

ValidationRecord validate_full(const planner::Model& model,
                               const std::vector<parcom::MaskedInstance>& instances,
                               double lambda_plan, double lambda_next, uint64_t seed);

}  // namespace ssp::trainer
