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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ssplanner/corpus.hpp"
#include "ssplanner/parcom.hpp"
#include "ssplanner/planex.hpp"
#include "ssplanner/tensor.hpp"

namespace ssp::planner {

inline constexpr double kLogFloor = 1e-12;

struct ModelConfig {
  int vocab_size = 0;  // filled from the vocabulary
  int layers = 2;
  int heads = 2;
  int d_model = 64;
  int d_pos = 16;
  int max_seq = 128;   // word position table
  int max_para = 64;   // sentence position table
  int train_nkps = 3;  // keywords per target sentence fed to the planner
  int t_max = 3;
  bool use_sentence_pos = true;  // false under the SP ablation

  int p_max() const { return train_nkps * t_max; }
  int ffn_dim() const { return 4 * d_model; }
  int head_dim() const { return d_model / heads; }
  int ctx_dim() const { return d_model + d_pos; }  // h_c = [mean state ; pos]
  int gate_in_dim() const { return ctx_dim() + p_max() + d_pos + d_model; }

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
  Tensor attn_wq, attn_bq, attn_wk, attn_bk, attn_wv, attn_bv, attn_wo, attn_bo;
  Tensor ln1_g, ln1_b, ln2_g, ln2_b;
  Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

// Every trainable tensor of the model. Kept in double precision in memory;
// checkpoints narrow to float32.
struct Params {
  Tensor tok_emb;       // V x d, tied into the plan head
  Tensor word_pos_emb;  // max_seq x d
  Tensor sent_pos_emb;  // max_para x d_pos
  std::vector<LayerParams> layers;
  Tensor ln_f_g, ln_f_b;
  Tensor lm_w, lm_b;      // d x V, 1 x V, untied LM head
  Tensor plan_w;          // ctx_dim x d
  Tensor nsp_w, nsp_b;    // ctx_dim x 1, 1 x 1
  Tensor gate_w, gate_b;  // gate_in_dim x 1, 1 x 1
  Tensor kattn_w;         // d x (d + d_pos), keyword attention bilinear map

  static Params shaped(const ModelConfig& cfg);  // zero tensors, right shapes
  void zero_();
  bool all_finite() const;
};

// Fixed traversal order shared by initialization, the optimizer, and the
// checkpoint format.
void visit_params(Params& p, const std::function<void(const std::string&, Tensor&)>& fn);
void visit_params(const Params& p,
                  const std::function<void(const std::string&, const Tensor&)>& fn);

struct EncodedSentence {
  int pos = 0;
  std::vector<int> ids;
};

// A masked instance resolved against the vocabulary, sentences sorted by
// original position so downstream math never depends on feeding order.
struct EncodedInstance {
  std::vector<EncodedSentence> context;
  std::vector<EncodedSentence> target;
  std::vector<int> keyword_ids;  // deduplicated training keywords
  bool negative = false;
  int paragraph_len = 0;
};

// Keywords the planner trains against: flat plan order filtered to the top
// train_nkps entries of each per-sentence list, deduplicated.
std::vector<std::string> training_keywords(const parcom::MaskedInstance& instance,
                                           int train_nkps);

EncodedInstance encode_instance(const parcom::MaskedInstance& instance,
                                const corpus::Vocabulary& vocab, const ModelConfig& cfg);

struct PlanPrediction {
  std::vector<double> vocab_probs;                   // full distribution, specials included
  std::vector<std::pair<int, double>> top_keywords;  // p argmax entries, specials excluded
};

struct LossBreakdown {
  double plan = 0.0;
  double nsp = 0.0;
  double gen = 0.0;
  double total = 0.0;
  int gen_steps = 0;       // scored decoding steps (target tokens + EOS marks)
  bool full = false;       // false for NSP-only (negative) instances
};

struct DecodeStepTrace {
  double gate = 0.0;
  std::vector<double> alpha;
};

struct DecodeOptions {
  enum class Mode { kGreedy, kNucleus };
  Mode mode = Mode::kGreedy;
  double top_p = 1.0;
  int max_len = 24;  // per target sentence, EOS excluded
  uint64_t seed = 0;
  // When set, these tokens drive the copy mechanism (ground-truth/random
  // sources); otherwise the model predicts train_nkps * t keywords itself.
  std::optional<std::vector<std::string>> provided_keywords;
  std::optional<double> force_gate;  // diagnostic override
  std::vector<DecodeStepTrace>* trace = nullptr;
};

struct DecodeResult {
  std::vector<std::vector<std::string>> sentences;  // one per masked slot
  std::vector<std::string> keywords_used;
};

class Model {
 public:
  Model(ModelConfig cfg, corpus::Vocabulary vocab, uint64_t init_seed);
  Model(ModelConfig cfg, corpus::Vocabulary vocab, Params params);

  const ModelConfig& config() const { return cfg_; }
  const corpus::Vocabulary& vocab() const { return vocab_; }
  const Params& params() const { return params_; }
  Params& mutable_params() { return params_; }

  struct ContextEncoding {
    Tensor h_rows;  // one row per context sentence, d + d_pos wide
    Tensor h_c;     // 1 x (d + d_pos)
  };
  ContextEncoding encode_context(const EncodedInstance& instance) const;

  PlanPrediction predict_plan(const EncodedInstance& instance, int p) const;
  double nsp_predict(const EncodedInstance& instance) const;

  // Copy gate and keyword attention on plain values; the training graph
  // mirrors the same formulas.
  double copy_gate(const Tensor& h_c, const std::vector<double>& k_hat_padded, int target_pos,
                   const Tensor& decoder_state) const;
  std::vector<double> plan_attention(const Tensor& decoder_state, int target_pos,
                                     const std::vector<double>& k_hat,
                                     const std::vector<int>& keyword_ids) const;

  // include_gen=false drops the surface objective, leaving
  // lambda_plan * L_plan + lambda_next * L_next; with lambdas this isolates
  // each loss term for gradient checking and head-only pretraining.
  LossBreakdown loss(const EncodedInstance& instance, double lambda_plan, double lambda_next,
                     bool include_gen = true) const;
  // Accumulates d(total)/d(param) into grads.
  LossBreakdown loss_and_gradients(const EncodedInstance& instance, double lambda_plan,
                                   double lambda_next, Params& grads,
                                   bool include_gen = true) const;

  // Teacher-forced per-step mixed distributions, for distribution checks.
  std::vector<std::vector<double>> training_step_distributions(
      const EncodedInstance& instance) const;

  DecodeResult decode_targets(const parcom::MaskedInstance& instance,
                              const DecodeOptions& options) const;

  // Head-0 attention mass each context word receives from the gold target
  // tokens, averaged over layers; specials and punctuation excluded.
  std::vector<planex::ScoredWord> attention_received(const parcom::MaskedInstance& instance) const;
  // Same scores restricted to each target sentence's tokens, one list per
  // target sentence; used when attention drives plan extraction.
  std::vector<std::vector<planex::ScoredWord>> attention_received_per_sentence(
      const parcom::MaskedInstance& instance) const;
  // Raw per-layer head-0 maps for the same teacher-forced sequence, plus the
  // flat sequence ids; lets tests average the layers independently.
  std::vector<Tensor> attention_head0_maps(const parcom::MaskedInstance& instance,
                                           std::vector<int>* sequence_ids = nullptr) const;

 private:
  ModelConfig cfg_;
  corpus::Vocabulary vocab_;
  Params params_;
};

// Reference loss/mixture semantics on plain values.
double plan_loss(const std::vector<double>& vocab_probs, const std::vector<int>& gold_ids);
double nsp_loss(double prob, int label);
std::vector<double> mix_distributions(double gate, const std::vector<double>& alpha,
                                      const std::vector<int>& keyword_ids,
                                      const std::vector<double>& lm_probs);
double generation_loss(const std::vector<std::vector<double>>& mixed_per_step,
                       const std::vector<int>& gold_ids);
double total_loss(double l_plan, double l_next, double l_gen, double lambda_plan,
                  double lambda_next);

}  // namespace ssp::planner
