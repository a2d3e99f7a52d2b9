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

#include "ssplanner/planner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "ssplanner/errors.hpp"
#include "ssplanner/rng.hpp"

namespace ssp::planner {

void ModelConfig::validate() const {
  if (vocab_size <= corpus::kNumSpecials) throw InputError("model: vocab_size too small");
  if (layers < 0) throw InputError("model: layers must be >= 0");
  if (heads < 1) throw InputError("model: heads must be >= 1");
  if (d_model < 1 || d_pos < 1) throw InputError("model: dimensions must be >= 1");
  if (d_model % heads != 0) throw InputError("model: d_model must divide evenly into heads");
  if (max_seq < 2 || max_para < 1) throw InputError("model: position tables too small");
  if (train_nkps < 1 || t_max < 1) throw InputError("model: train_nkps and t_max must be >= 1");
}

Params Params::shaped(const ModelConfig& cfg) {
  Params p;
  p.tok_emb = Tensor(cfg.vocab_size, cfg.d_model);
  p.word_pos_emb = Tensor(cfg.max_seq, cfg.d_model);
  p.sent_pos_emb = Tensor(cfg.max_para, cfg.d_pos);
  p.layers.resize(cfg.layers);
  for (LayerParams& l : p.layers) {
    l.attn_wq = Tensor(cfg.d_model, cfg.d_model);
    l.attn_bq = Tensor(1, cfg.d_model);
    l.attn_wk = Tensor(cfg.d_model, cfg.d_model);
    l.attn_bk = Tensor(1, cfg.d_model);
    l.attn_wv = Tensor(cfg.d_model, cfg.d_model);
    l.attn_bv = Tensor(1, cfg.d_model);
    l.attn_wo = Tensor(cfg.d_model, cfg.d_model);
    l.attn_bo = Tensor(1, cfg.d_model);
    l.ln1_g = Tensor(1, cfg.d_model);
    l.ln1_b = Tensor(1, cfg.d_model);
    l.ln2_g = Tensor(1, cfg.d_model);
    l.ln2_b = Tensor(1, cfg.d_model);
    l.ffn_w1 = Tensor(cfg.d_model, cfg.ffn_dim());
    l.ffn_b1 = Tensor(1, cfg.ffn_dim());
    l.ffn_w2 = Tensor(cfg.ffn_dim(), cfg.d_model);
    l.ffn_b2 = Tensor(1, cfg.d_model);
  }
  p.ln_f_g = Tensor(1, cfg.d_model);
  p.ln_f_b = Tensor(1, cfg.d_model);
  p.lm_w = Tensor(cfg.d_model, cfg.vocab_size);
  p.lm_b = Tensor(1, cfg.vocab_size);
  p.plan_w = Tensor(cfg.ctx_dim(), cfg.d_model);
  p.nsp_w = Tensor(cfg.ctx_dim(), 1);
  p.nsp_b = Tensor(1, 1);
  p.gate_w = Tensor(cfg.gate_in_dim(), 1);
  p.gate_b = Tensor(1, 1);
  p.kattn_w = Tensor(cfg.d_model, cfg.d_model + cfg.d_pos);
  return p;
}

void Params::zero_() {
  visit_params(*this, [](const std::string&, Tensor& t) { t.zero_(); });
}

bool Params::all_finite() const {
  bool ok = true;
  visit_params(*this, [&](const std::string&, const Tensor& t) { ok = ok && t.all_finite(); });
  return ok;
}

namespace {

template <typename ParamsT, typename Fn>
void visit_impl(ParamsT& p, Fn&& fn) {
  fn("tok_emb", p.tok_emb);
  fn("word_pos_emb", p.word_pos_emb);
  fn("sent_pos_emb", p.sent_pos_emb);
  for (size_t i = 0; i < p.layers.size(); ++i) {
    const std::string base = "layers." + std::to_string(i) + ".";
    auto& l = p.layers[i];
    fn(base + "attn_wq", l.attn_wq);
    fn(base + "attn_bq", l.attn_bq);
    fn(base + "attn_wk", l.attn_wk);
    fn(base + "attn_bk", l.attn_bk);
    fn(base + "attn_wv", l.attn_wv);
    fn(base + "attn_bv", l.attn_bv);
    fn(base + "attn_wo", l.attn_wo);
    fn(base + "attn_bo", l.attn_bo);
    fn(base + "ln1_g", l.ln1_g);
    fn(base + "ln1_b", l.ln1_b);
    fn(base + "ln2_g", l.ln2_g);
    fn(base + "ln2_b", l.ln2_b);
    fn(base + "ffn_w1", l.ffn_w1);
    fn(base + "ffn_b1", l.ffn_b1);
    fn(base + "ffn_w2", l.ffn_w2);
    fn(base + "ffn_b2", l.ffn_b2);
  }
  fn("ln_f_g", p.ln_f_g);
  fn("ln_f_b", p.ln_f_b);
  fn("lm_w", p.lm_w);
  fn("lm_b", p.lm_b);
  fn("plan_w", p.plan_w);
  fn("nsp_w", p.nsp_w);
  fn("nsp_b", p.nsp_b);
  fn("gate_w", p.gate_w);
  fn("gate_b", p.gate_b);
  fn("kattn_w", p.kattn_w);
}

bool is_layer_norm_gain(const std::string& name) {
  return name.ends_with("ln1_g") || name.ends_with("ln2_g") || name.ends_with("ln_f_g");
}

bool is_punct_word(const std::string& token) {
  for (unsigned char c : token) {
    if (std::isalnum(c) != 0 || c >= 0x80) return false;
  }
  return true;
}

}  // namespace

void visit_params(Params& p, const std::function<void(const std::string&, Tensor&)>& fn) {
  visit_impl(p, fn);
}

void visit_params(const Params& p,
                  const std::function<void(const std::string&, const Tensor&)>& fn) {
  visit_impl(p, fn);
}

std::vector<std::string> training_keywords(const parcom::MaskedInstance& instance,
                                           int train_nkps) {
  std::set<std::string> allowed;
  for (const auto& sentence_list : instance.plan.per_sentence) {
    const int take = std::min<int>(train_nkps, static_cast<int>(sentence_list.size()));
    for (int i = 0; i < take; ++i) allowed.insert(sentence_list[i]);
  }
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const std::string& token : instance.plan.flat) {
    if (allowed.count(token) > 0 && seen.insert(token).second) out.push_back(token);
  }
  return out;
}

EncodedInstance encode_instance(const parcom::MaskedInstance& instance,
                                const corpus::Vocabulary& vocab, const ModelConfig& cfg) {
  EncodedInstance enc;
  enc.negative = instance.is_negative_nsp;
  enc.paragraph_len = instance.paragraph_len;
  auto convert = [&](const std::vector<parcom::PositionedSentence>& in,
                     std::vector<EncodedSentence>& out) {
    for (const auto& ps : in) out.push_back({ps.pos, vocab.encode(ps.sentence)});
    std::sort(out.begin(), out.end(),
              [](const EncodedSentence& a, const EncodedSentence& b) { return a.pos < b.pos; });
  };
  convert(instance.context, enc.context);
  convert(instance.target, enc.target);
  std::set<int> seen;
  for (const std::string& token : training_keywords(instance, cfg.train_nkps)) {
    if (static_cast<int>(enc.keyword_ids.size()) >= cfg.p_max()) break;
    const int id = vocab.id_of(token);
    if (seen.insert(id).second) enc.keyword_ids.push_back(id);
  }
  return enc;
}

// ---------------------------------------------------------------------------
// Graph-side forward pieces. One Forward per example; leaves bind parameter
// values and (optionally) gradient sinks.
// ---------------------------------------------------------------------------

namespace {

struct LayerLeaves {
  Graph::Var wq, bq, wk, bk, wv, bv, wo, bo;
  Graph::Var ln1_g, ln1_b, ln2_g, ln2_b;
  Graph::Var ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

struct Forward {
  Graph g;
  const ModelConfig& cfg;
  Graph::Var tok_emb, word_pos_emb, sent_pos_emb;
  std::vector<LayerLeaves> layers;
  Graph::Var ln_f_g, ln_f_b, lm_w, lm_b, plan_w, nsp_w, nsp_b, gate_w, gate_b, kattn_w;

  Forward(const ModelConfig& config, const Params& params, Params* grads) : cfg(config) {
    auto bind = [&](const Tensor& value, Tensor* sink) { return g.leaf(value, sink); };
    tok_emb = bind(params.tok_emb, grads ? &grads->tok_emb : nullptr);
    word_pos_emb = bind(params.word_pos_emb, grads ? &grads->word_pos_emb : nullptr);
    sent_pos_emb = bind(params.sent_pos_emb, grads ? &grads->sent_pos_emb : nullptr);
    layers.resize(params.layers.size());
    for (size_t i = 0; i < params.layers.size(); ++i) {
      const LayerParams& lp = params.layers[i];
      LayerParams* lg = grads ? &grads->layers[i] : nullptr;
      LayerLeaves& ll = layers[i];
      ll.wq = bind(lp.attn_wq, lg ? &lg->attn_wq : nullptr);
      ll.bq = bind(lp.attn_bq, lg ? &lg->attn_bq : nullptr);
      ll.wk = bind(lp.attn_wk, lg ? &lg->attn_wk : nullptr);
      ll.bk = bind(lp.attn_bk, lg ? &lg->attn_bk : nullptr);
      ll.wv = bind(lp.attn_wv, lg ? &lg->attn_wv : nullptr);
      ll.bv = bind(lp.attn_bv, lg ? &lg->attn_bv : nullptr);
      ll.wo = bind(lp.attn_wo, lg ? &lg->attn_wo : nullptr);
      ll.bo = bind(lp.attn_bo, lg ? &lg->attn_bo : nullptr);
      ll.ln1_g = bind(lp.ln1_g, lg ? &lg->ln1_g : nullptr);
      ll.ln1_b = bind(lp.ln1_b, lg ? &lg->ln1_b : nullptr);
      ll.ln2_g = bind(lp.ln2_g, lg ? &lg->ln2_g : nullptr);
      ll.ln2_b = bind(lp.ln2_b, lg ? &lg->ln2_b : nullptr);
      ll.ffn_w1 = bind(lp.ffn_w1, lg ? &lg->ffn_w1 : nullptr);
      ll.ffn_b1 = bind(lp.ffn_b1, lg ? &lg->ffn_b1 : nullptr);
      ll.ffn_w2 = bind(lp.ffn_w2, lg ? &lg->ffn_w2 : nullptr);
      ll.ffn_b2 = bind(lp.ffn_b2, lg ? &lg->ffn_b2 : nullptr);
    }
    ln_f_g = bind(params.ln_f_g, grads ? &grads->ln_f_g : nullptr);
    ln_f_b = bind(params.ln_f_b, grads ? &grads->ln_f_b : nullptr);
    lm_w = bind(params.lm_w, grads ? &grads->lm_w : nullptr);
    lm_b = bind(params.lm_b, grads ? &grads->lm_b : nullptr);
    plan_w = bind(params.plan_w, grads ? &grads->plan_w : nullptr);
    nsp_w = bind(params.nsp_w, grads ? &grads->nsp_w : nullptr);
    nsp_b = bind(params.nsp_b, grads ? &grads->nsp_b : nullptr);
    gate_w = bind(params.gate_w, grads ? &grads->gate_w : nullptr);
    gate_b = bind(params.gate_b, grads ? &grads->gate_b : nullptr);
    kattn_w = bind(params.kattn_w, grads ? &grads->kattn_w : nullptr);
  }

  Graph::Var pos_row(int pos) {
    if (pos < 0 || pos >= cfg.max_para) {
      throw InputError("sentence position " + std::to_string(pos) +
                       " outside the position embedding table");
    }
    if (!cfg.use_sentence_pos) return g.input(Tensor(1, cfg.d_pos));  // SP ablation: constant zero
    return g.gather_rows(sent_pos_emb, {pos});
  }

  // Final hidden states (post final layer norm) for a token id sequence.
  Graph::Var transformer(const std::vector<int>& ids, std::vector<Tensor>* head0_maps) {
    const int n = static_cast<int>(ids.size());
    if (n < 1) throw InputError("transformer: empty sequence");
    if (n > cfg.max_seq) {
      throw InputError("sequence of length " + std::to_string(n) +
                       " exceeds max_seq=" + std::to_string(cfg.max_seq));
    }
    std::vector<int> positions(n);
    std::iota(positions.begin(), positions.end(), 0);
    Graph::Var x = g.add(g.gather_rows(tok_emb, ids), g.gather_rows(word_pos_emb, positions));
    if (cfg.layers > 0) {
      Graph::Var mask = g.causal_mask(n);
      const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim()));
      for (const LayerLeaves& l : layers) {
        Graph::Var h = g.layer_norm_rows(x, l.ln1_g, l.ln1_b);
        Graph::Var q = g.add_rowvec(g.matmul(h, l.wq), l.bq);
        Graph::Var k = g.add_rowvec(g.matmul(h, l.wk), l.bk);
        Graph::Var v = g.add_rowvec(g.matmul(h, l.wv), l.bv);
        std::vector<Graph::Var> head_ctx;
        for (int hd = 0; hd < cfg.heads; ++hd) {
          const int c0 = hd * cfg.head_dim();
          const int c1 = c0 + cfg.head_dim();
          Graph::Var qh = g.slice_cols(q, c0, c1);
          Graph::Var kh = g.slice_cols(k, c0, c1);
          Graph::Var vh = g.slice_cols(v, c0, c1);
          Graph::Var scores = g.affine(g.matmul_nt(qh, kh), inv_sqrt_dh, 0.0);
          Graph::Var attn = g.softmax_rows(g.add(scores, mask));
          if (head0_maps != nullptr && hd == 0) head0_maps->push_back(*attn->val);
          head_ctx.push_back(g.matmul(attn, vh));
        }
        Graph::Var att_out = cfg.heads == 1 ? head_ctx[0] : g.concat_cols(head_ctx);
        x = g.add(x, g.add_rowvec(g.matmul(att_out, l.wo), l.bo));
        Graph::Var h2 = g.layer_norm_rows(x, l.ln2_g, l.ln2_b);
        Graph::Var f = g.gelu(g.add_rowvec(g.matmul(h2, l.ffn_w1), l.ffn_b1));
        x = g.add(x, g.add_rowvec(g.matmul(f, l.ffn_w2), l.ffn_b2));
      }
    }
    return g.layer_norm_rows(x, ln_f_g, ln_f_b);
  }

  // Sentence rows [mean state ; pos embedding] and their mean h_c.
  std::pair<Graph::Var, Graph::Var> context(const EncodedInstance& inst) {
    if (inst.context.empty()) throw InputError("encode_context: instance has no context");
    std::vector<Graph::Var> rows;
    rows.reserve(inst.context.size());
    for (const EncodedSentence& s : inst.context) {
      Graph::Var states = transformer(s.ids, nullptr);
      rows.push_back(g.concat_cols({g.mean_rows(states), pos_row(s.pos)}));
    }
    Graph::Var all = rows.size() == 1 ? rows[0] : g.concat_rows(rows);
    return {all, g.mean_rows(all)};
  }

  Graph::Var plan_probs(Graph::Var h_c) {
    return g.softmax_rows(g.matmul_nt(g.matmul(h_c, plan_w), tok_emb));
  }

  Graph::Var nsp_prob(Graph::Var h_c) {
    return g.sigmoid(g.add(g.matmul(h_c, nsp_w), nsp_b));
  }

  Graph::Var khat_padded(Graph::Var khat) {
    const int nk = khat->val->cols;
    if (nk == cfg.p_max()) return khat;
    return g.concat_cols({khat, g.input(Tensor(1, cfg.p_max() - nk))});
  }

  Graph::Var gate(Graph::Var h_c, Graph::Var khat_pad, int target_pos, Graph::Var state) {
    Graph::Var in = g.concat_cols({h_c, khat_pad, pos_row(target_pos), state});
    return g.sigmoid(g.add(g.matmul(in, gate_w), gate_b));
  }

  Graph::Var alpha(Graph::Var state, int target_pos, Graph::Var khat,
                   const std::vector<int>& kw_ids) {
    Graph::Var ek = g.gather_rows(tok_emb, kw_ids);
    Graph::Var proj = g.matmul(ek, kattn_w);
    Graph::Var sp = g.concat_cols({state, pos_row(target_pos)});
    Graph::Var scores = g.transpose(g.matmul_nt(proj, sp));
    return g.softmax_rows(g.hadamard(khat, scores));
  }

  Graph::Var mixed(Graph::Var gate_v, Graph::Var alpha_v, const std::vector<int>& kw_ids,
                   Graph::Var lm_row) {
    Graph::Var copy = g.scatter_cols(alpha_v, kw_ids, cfg.vocab_size);
    Graph::Var lm_part = g.scale_by_scalar(lm_row, g.affine(gate_v, -1.0, 1.0));
    return g.add(g.scale_by_scalar(copy, gate_v), lm_part);
  }

  Graph::Var neg_log(Graph::Var p) { return g.affine(g.log_floor(p, kLogFloor), -1.0, 0.0); }
};

std::vector<int> context_prefix_ids(const EncodedInstance& inst) {
  std::vector<int> ids{corpus::kBos};
  for (const EncodedSentence& s : inst.context) {
    ids.insert(ids.end(), s.ids.begin(), s.ids.end());
    ids.push_back(corpus::kSep);
  }
  return ids;
}

struct GenStep {
  int seq_index = 0;   // position of the gold token within the full sequence
  int gold_id = 0;
  int target_pos = 0;  // original sentence position of the slot being filled
};

// Teacher-forced sequence: prefix followed by each target sentence and its
// terminating EOS. Every target token and EOS is a scored step.
std::pair<std::vector<int>, std::vector<GenStep>> teacher_sequence(const EncodedInstance& inst) {
  std::vector<int> ids = context_prefix_ids(inst);
  std::vector<GenStep> steps;
  for (const EncodedSentence& s : inst.target) {
    for (int id : s.ids) {
      steps.push_back({static_cast<int>(ids.size()), id, s.pos});
      ids.push_back(id);
    }
    steps.push_back({static_cast<int>(ids.size()), corpus::kEos, s.pos});
    ids.push_back(corpus::kEos);
  }
  return {std::move(ids), std::move(steps)};
}

struct BuiltLosses {
  Graph::Var plan = nullptr;
  Graph::Var nsp = nullptr;
  Graph::Var gen = nullptr;
  Graph::Var total = nullptr;
  int gen_steps = 0;
};

BuiltLosses build_losses(Forward& fwd, const EncodedInstance& inst, double lambda_plan,
                         double lambda_next, bool include_gen,
                         std::vector<std::vector<double>>* step_distributions) {
  BuiltLosses out;
  Graph& g = fwd.g;
  auto [h_rows, h_c] = fwd.context(inst);
  (void)h_rows;

  // Next-sentence head: label 1 for true targets, 0 for sampled negatives.
  Graph::Var p_next = fwd.nsp_prob(h_c);
  out.nsp = inst.negative ? fwd.neg_log(g.affine(p_next, -1.0, 1.0)) : fwd.neg_log(p_next);

  if (inst.negative) {
    // Negatives carry replaced target spans; only the NSP signal is real.
    out.total = g.affine(out.nsp, lambda_next, 0.0);
    return out;
  }

  Graph::Var plan_probs = fwd.plan_probs(h_c);
  if (!inst.keyword_ids.empty()) {
    // Multi-hot cross-entropy: -sum over gold ids of log p-hat.
    Graph::Var picked = g.gather_cols(plan_probs, inst.keyword_ids);
    out.plan = g.affine(g.sum_all(g.log_floor(picked, kLogFloor)), -1.0, 0.0);
  }

  if (include_gen) {
    auto [seq_ids, steps] = teacher_sequence(inst);
    Graph::Var states = fwd.transformer(seq_ids, nullptr);
    Graph::Var lm_all = g.softmax_rows(g.add_rowvec(g.matmul(states, fwd.lm_w), fwd.lm_b));

    Graph::Var khat = nullptr;
    Graph::Var khat_pad = nullptr;
    if (!inst.keyword_ids.empty()) {
      khat = g.gather_cols(plan_probs, inst.keyword_ids);
      khat_pad = fwd.khat_padded(khat);
    }

    Graph::Var gen_sum = nullptr;
    for (const GenStep& step : steps) {
      Graph::Var state = g.slice_rows(states, step.seq_index - 1, step.seq_index);
      Graph::Var lm_row = g.slice_rows(lm_all, step.seq_index - 1, step.seq_index);
      Graph::Var dist = lm_row;
      if (khat != nullptr) {
        Graph::Var gate_v = fwd.gate(h_c, khat_pad, step.target_pos, state);
        Graph::Var alpha_v = fwd.alpha(state, step.target_pos, khat, inst.keyword_ids);
        dist = fwd.mixed(gate_v, alpha_v, inst.keyword_ids, lm_row);
      }
      if (step_distributions != nullptr) step_distributions->push_back(dist->val->data);
      Graph::Var step_loss = fwd.neg_log(g.gather_cols(dist, {step.gold_id}));
      gen_sum = gen_sum == nullptr ? step_loss : g.add(gen_sum, step_loss);
    }
    out.gen = gen_sum;
    out.gen_steps = static_cast<int>(steps.size());
  }

  Graph::Var total = nullptr;
  if (out.gen != nullptr) total = out.gen;
  if (out.plan != nullptr) {
    Graph::Var weighted = g.affine(out.plan, lambda_plan, 0.0);
    total = total == nullptr ? weighted : g.add(total, weighted);
  }
  Graph::Var weighted_nsp = g.affine(out.nsp, lambda_next, 0.0);
  total = total == nullptr ? weighted_nsp : g.add(total, weighted_nsp);
  out.total = total;
  return out;
}

}  // namespace

Model::Model(ModelConfig cfg, corpus::Vocabulary vocab, uint64_t init_seed)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)) {
  cfg_.vocab_size = vocab_.size();
  cfg_.validate();
  params_ = Params::shaped(cfg_);
  Rng rng(derive_seed(init_seed, "init"));
  visit_params(params_, [&](const std::string& name, Tensor& t) {
    if (is_layer_norm_gain(name)) {
      t = Tensor::full(t.rows, t.cols, 1.0);
    } else {
      t.fill_uniform(rng, -0.05, 0.05);
    }
    t.round_to_f32();  // keeps fresh parameters exactly f32-representable
  });
}

Model::Model(ModelConfig cfg, corpus::Vocabulary vocab, Params params)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)), params_(std::move(params)) {
  cfg_.vocab_size = vocab_.size();
  cfg_.validate();
}

Model::ContextEncoding Model::encode_context(const EncodedInstance& instance) const {
  Forward fwd(cfg_, params_, nullptr);
  auto [rows, h_c] = fwd.context(instance);
  return {*rows->val, *h_c->val};
}

PlanPrediction Model::predict_plan(const EncodedInstance& instance, int p) const {
  if (p < 1) throw InputError("predict_plan: p must be >= 1");
  if (p > cfg_.vocab_size - corpus::kNumSpecials) {
    throw InputError("predict_plan: p exceeds the non-special vocabulary");
  }
  Forward fwd(cfg_, params_, nullptr);
  auto [rows, h_c] = fwd.context(instance);
  (void)rows;
  Graph::Var probs = fwd.plan_probs(h_c);
  PlanPrediction pred;
  pred.vocab_probs = probs->val->data;
  std::vector<int> order;
  order.reserve(cfg_.vocab_size - corpus::kNumSpecials);
  for (int id = corpus::kNumSpecials; id < cfg_.vocab_size; ++id) order.push_back(id);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (pred.vocab_probs[a] != pred.vocab_probs[b]) {
      return pred.vocab_probs[a] > pred.vocab_probs[b];
    }
    return a < b;
  });
  for (int i = 0; i < p; ++i) pred.top_keywords.emplace_back(order[i], pred.vocab_probs[order[i]]);
  return pred;
}

double Model::nsp_predict(const EncodedInstance& instance) const {
  Forward fwd(cfg_, params_, nullptr);
  auto [rows, h_c] = fwd.context(instance);
  (void)rows;
  return fwd.nsp_prob(h_c)->val->data[0];
}

double Model::copy_gate(const Tensor& h_c, const std::vector<double>& k_hat_padded,
                        int target_pos, const Tensor& decoder_state) const {
  if (static_cast<int>(k_hat_padded.size()) != cfg_.p_max()) {
    throw InputError("copy_gate: k_hat must be zero-padded to p_max");
  }
  if (target_pos < 0 || target_pos >= cfg_.max_para) {
    throw InputError("copy_gate: target position out of range");
  }
  if (h_c.cols != cfg_.ctx_dim() || decoder_state.cols != cfg_.d_model) {
    throw InputError("copy_gate: bad input widths");
  }
  double z = params_.gate_b.at(0, 0);
  int row = 0;
  for (int j = 0; j < h_c.cols; ++j) z += h_c.at(0, j) * params_.gate_w.at(row++, 0);
  for (double v : k_hat_padded) z += v * params_.gate_w.at(row++, 0);
  for (int j = 0; j < cfg_.d_pos; ++j) {
    const double pv = cfg_.use_sentence_pos ? params_.sent_pos_emb.at(target_pos, j) : 0.0;
    z += pv * params_.gate_w.at(row++, 0);
  }
  for (int j = 0; j < cfg_.d_model; ++j) {
    z += decoder_state.at(0, j) * params_.gate_w.at(row++, 0);
  }
  return 1.0 / (1.0 + std::exp(-z));
}

std::vector<double> Model::plan_attention(const Tensor& decoder_state, int target_pos,
                                          const std::vector<double>& k_hat,
                                          const std::vector<int>& keyword_ids) const {
  if (keyword_ids.empty()) throw InputError("plan_attention: need at least one keyword");
  if (k_hat.size() != keyword_ids.size()) {
    throw InputError("plan_attention: k_hat and keyword id counts differ");
  }
  if (target_pos < 0 || target_pos >= cfg_.max_para) {
    throw InputError("plan_attention: target position out of range");
  }
  // m = W_kj [s ; pos], then score_k = k_hat_k * <e_k, m>.
  std::vector<double> sp(cfg_.d_model + cfg_.d_pos, 0.0);
  for (int j = 0; j < cfg_.d_model; ++j) sp[j] = decoder_state.at(0, j);
  for (int j = 0; j < cfg_.d_pos; ++j) {
    sp[cfg_.d_model + j] = cfg_.use_sentence_pos ? params_.sent_pos_emb.at(target_pos, j) : 0.0;
  }
  std::vector<double> m(cfg_.d_model, 0.0);
  for (int i = 0; i < cfg_.d_model; ++i) {
    double s = 0.0;
    for (size_t j = 0; j < sp.size(); ++j) s += params_.kattn_w.at(i, static_cast<int>(j)) * sp[j];
    m[i] = s;
  }
  std::vector<double> scores(keyword_ids.size(), 0.0);
  for (size_t k = 0; k < keyword_ids.size(); ++k) {
    const int id = keyword_ids[k];
    if (id < 0 || id >= cfg_.vocab_size) throw InputError("plan_attention: keyword id out of vocab");
    double s = 0.0;
    for (int j = 0; j < cfg_.d_model; ++j) s += params_.tok_emb.at(id, j) * m[j];
    scores[k] = k_hat[k] * s;
  }
  double mx = scores[0];
  for (double s : scores) mx = std::max(mx, s);
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - mx);
    sum += s;
  }
  for (double& s : scores) s /= sum;
  return scores;
}

LossBreakdown Model::loss(const EncodedInstance& instance, double lambda_plan,
                          double lambda_next, bool include_gen) const {
  Forward fwd(cfg_, params_, nullptr);
  BuiltLosses built = build_losses(fwd, instance, lambda_plan, lambda_next, include_gen, nullptr);
  LossBreakdown out;
  out.nsp = built.nsp->val->data[0];
  out.plan = built.plan != nullptr ? built.plan->val->data[0] : 0.0;
  out.gen = built.gen != nullptr ? built.gen->val->data[0] : 0.0;
  out.total = built.total->val->data[0];
  out.gen_steps = built.gen_steps;
  out.full = !instance.negative;
  return out;
}

LossBreakdown Model::loss_and_gradients(const EncodedInstance& instance, double lambda_plan,
                                        double lambda_next, Params& grads,
                                        bool include_gen) const {
  Forward fwd(cfg_, params_, &grads);
  BuiltLosses built = build_losses(fwd, instance, lambda_plan, lambda_next, include_gen, nullptr);
  fwd.g.backward(built.total);
  LossBreakdown out;
  out.nsp = built.nsp->val->data[0];
  out.plan = built.plan != nullptr ? built.plan->val->data[0] : 0.0;
  out.gen = built.gen != nullptr ? built.gen->val->data[0] : 0.0;
  out.total = built.total->val->data[0];
  out.gen_steps = built.gen_steps;
  out.full = !instance.negative;
  if (!std::isfinite(out.total)) {
    throw NumericError("non-finite loss encountered");
  }
  return out;
}

std::vector<std::vector<double>> Model::training_step_distributions(
    const EncodedInstance& instance) const {
  Forward fwd(cfg_, params_, nullptr);
  std::vector<std::vector<double>> dists;
  build_losses(fwd, instance, 1.0, 1.0, true, &dists);
  return dists;
}

DecodeResult Model::decode_targets(const parcom::MaskedInstance& instance,
                                   const DecodeOptions& options) const {
  if (options.max_len < 1) throw InputError("decode_targets: max_len must be >= 1");
  if (options.mode == DecodeOptions::Mode::kNucleus &&
      (options.top_p <= 0.0 || options.top_p > 1.0)) {
    throw InputError("decode_targets: top_p must lie in (0, 1]");
  }
  EncodedInstance enc = encode_instance(instance, vocab_, cfg_);

  DecodeResult result;
  std::vector<int> kw_ids;
  {
    Forward fwd(cfg_, params_, nullptr);
    auto [rows, h_c_var] = fwd.context(enc);
    (void)rows;
    const Tensor h_c = *h_c_var->val;
    const std::vector<double> plan_probs = fwd.plan_probs(h_c_var)->val->data;

    if (options.provided_keywords.has_value()) {
      result.keywords_used = *options.provided_keywords;
      for (const std::string& token : result.keywords_used) {
        kw_ids.push_back(vocab_.id_of(token));
      }
    } else {
      const int p = std::min(cfg_.train_nkps * static_cast<int>(enc.target.size()),
                             cfg_.vocab_size - corpus::kNumSpecials);
      std::vector<int> order;
      for (int id = corpus::kNumSpecials; id < cfg_.vocab_size; ++id) order.push_back(id);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (plan_probs[a] != plan_probs[b]) return plan_probs[a] > plan_probs[b];
        return a < b;
      });
      for (int i = 0; i < p; ++i) {
        kw_ids.push_back(order[i]);
        result.keywords_used.push_back(vocab_.token_of(order[i]));
      }
    }

    std::vector<double> k_hat;
    k_hat.reserve(kw_ids.size());
    for (int id : kw_ids) {
      if (id < 0 || id >= cfg_.vocab_size) throw InputError("decode: keyword id out of vocab");
      k_hat.push_back(plan_probs[id]);
    }
    std::vector<double> k_hat_padded = k_hat;
    k_hat_padded.resize(cfg_.p_max(), 0.0);

    Rng rng(derive_seed(options.seed, "decode"));
    std::vector<int> live = context_prefix_ids(enc);

    for (const EncodedSentence& slot : enc.target) {
      std::vector<std::string> sentence;
      for (int step = 0; step < options.max_len; ++step) {
        if (static_cast<int>(live.size()) >= cfg_.max_seq) break;  // force-end near the table edge
        Forward sf(cfg_, params_, nullptr);
        Graph::Var states = sf.transformer(live, nullptr);
        const int last = states->val->rows - 1;
        Graph::Var state = sf.g.slice_rows(states, last, last + 1);
        Graph::Var lm_row =
            sf.g.softmax_rows(sf.g.add_rowvec(sf.g.matmul(state, sf.lm_w), sf.lm_b));
        std::vector<double> dist = lm_row->val->data;
        const Tensor state_t = *state->val;

        DecodeStepTrace trace;
        if (!kw_ids.empty()) {
          const double gate_v = options.force_gate.has_value()
                                    ? *options.force_gate
                                    : copy_gate(h_c, k_hat_padded, slot.pos, state_t);
          const std::vector<double> alpha_v = plan_attention(state_t, slot.pos, k_hat, kw_ids);
          dist = mix_distributions(gate_v, alpha_v, kw_ids, dist);
          trace.gate = gate_v;
          trace.alpha = alpha_v;
        }
        if (options.trace != nullptr) options.trace->push_back(trace);

        int next_id;
        if (options.mode == DecodeOptions::Mode::kGreedy) {
          next_id = 0;
          for (int id = 1; id < cfg_.vocab_size; ++id) {
            if (dist[id] > dist[next_id]) next_id = id;
          }
        } else {
          // Nucleus: smallest prefix of the sorted distribution reaching
          // top_p, renormalized, sampled with the seeded generator.
          std::vector<int> order(cfg_.vocab_size);
          std::iota(order.begin(), order.end(), 0);
          std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (dist[a] != dist[b]) return dist[a] > dist[b];
            return a < b;
          });
          double cum = 0.0;
          size_t keep = 0;
          while (keep < order.size()) {
            cum += dist[order[keep]];
            ++keep;
            if (cum >= options.top_p) break;
          }
          const double u = rng.next_unit() * cum;
          double acc = 0.0;
          next_id = order[keep - 1];
          for (size_t i = 0; i < keep; ++i) {
            acc += dist[order[i]];
            if (u < acc) {
              next_id = order[i];
              break;
            }
          }
        }

        if (next_id == corpus::kEos) break;
        sentence.push_back(vocab_.token_of(next_id));
        live.push_back(next_id);
      }
      live.push_back(corpus::kEos);
      result.sentences.push_back(std::move(sentence));
    }
  }
  return result;
}

std::vector<Tensor> Model::attention_head0_maps(const parcom::MaskedInstance& instance,
                                                std::vector<int>* sequence_ids) const {
  if (cfg_.layers < 1) {
    throw InputError("attention extraction unsupported: model has no attention layers");
  }
  EncodedInstance enc = encode_instance(instance, vocab_, cfg_);
  auto [seq_ids, steps] = teacher_sequence(enc);
  (void)steps;
  Forward fwd(cfg_, params_, nullptr);
  std::vector<Tensor> maps;
  fwd.transformer(seq_ids, &maps);
  if (sequence_ids != nullptr) *sequence_ids = seq_ids;
  return maps;
}

namespace {

// Scores context words by the mean attention they receive from the listed
// target positions, folding repeated words to their best occurrence.
std::vector<planex::ScoredWord> score_context_words(
    const Tensor& mean_map, const std::vector<std::pair<int, std::string>>& context_words,
    const std::vector<int>& target_positions) {
  std::map<std::string, double> best;
  for (const auto& [cpos, token] : context_words) {
    double s = 0.0;
    for (int tpos : target_positions) s += mean_map.at(tpos, cpos);
    s /= static_cast<double>(target_positions.size());
    auto it = best.find(token);
    if (it == best.end() || s > it->second) best[token] = s;
  }
  std::vector<planex::ScoredWord> out;
  out.reserve(best.size());
  for (const auto& [token, score] : best) out.push_back({token, score});
  std::sort(out.begin(), out.end(), [](const planex::ScoredWord& a, const planex::ScoredWord& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.token < b.token;
  });
  return out;
}

}  // namespace

std::vector<planex::ScoredWord> Model::attention_received(
    const parcom::MaskedInstance& instance) const {
  std::vector<int> seq_ids;
  const std::vector<Tensor> maps = attention_head0_maps(instance, &seq_ids);
  const int n = static_cast<int>(seq_ids.size());
  Tensor mean_map(n, n);
  for (const Tensor& m : maps) mean_map.add_(m);
  mean_map.scale_(1.0 / static_cast<double>(maps.size()));

  // Reconstruct which sequence positions hold context words vs target words.
  EncodedInstance enc = encode_instance(instance, vocab_, cfg_);
  std::vector<std::pair<int, std::string>> context_words;  // (seq position, token)
  int pos = 1;  // skip BOS
  for (const EncodedSentence& s : enc.context) {
    for (int id : s.ids) {
      const std::string& token = vocab_.token_of(id);
      if (id >= corpus::kNumSpecials && !is_punct_word(token)) {
        context_words.emplace_back(pos, token);
      }
      ++pos;
    }
    ++pos;  // SEP
  }
  std::vector<int> target_positions;
  for (const EncodedSentence& s : enc.target) {
    for (size_t i = 0; i < s.ids.size(); ++i) {
      target_positions.push_back(pos);
      ++pos;
    }
    ++pos;  // EOS
  }
  return score_context_words(mean_map, context_words, target_positions);
}

std::vector<std::vector<planex::ScoredWord>> Model::attention_received_per_sentence(
    const parcom::MaskedInstance& instance) const {
  std::vector<int> seq_ids;
  const std::vector<Tensor> maps = attention_head0_maps(instance, &seq_ids);
  const int n = static_cast<int>(seq_ids.size());
  Tensor mean_map(n, n);
  for (const Tensor& m : maps) mean_map.add_(m);
  mean_map.scale_(1.0 / static_cast<double>(maps.size()));

  EncodedInstance enc = encode_instance(instance, vocab_, cfg_);
  std::vector<std::pair<int, std::string>> context_words;
  int pos = 1;
  for (const EncodedSentence& s : enc.context) {
    for (int id : s.ids) {
      const std::string& token = vocab_.token_of(id);
      if (id >= corpus::kNumSpecials && !is_punct_word(token)) {
        context_words.emplace_back(pos, token);
      }
      ++pos;
    }
    ++pos;
  }
  std::vector<std::vector<planex::ScoredWord>> out;
  for (const EncodedSentence& s : enc.target) {
    std::vector<int> target_positions;
    for (size_t i = 0; i < s.ids.size(); ++i) {
      target_positions.push_back(pos);
      ++pos;
    }
    ++pos;  // EOS
    out.push_back(score_context_words(mean_map, context_words, target_positions));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference loss semantics on plain values.
// ---------------------------------------------------------------------------

double plan_loss(const std::vector<double>& vocab_probs, const std::vector<int>& gold_ids) {
  if (gold_ids.empty()) throw InputError("plan_loss: empty gold keyword set");
  std::set<int> dedup(gold_ids.begin(), gold_ids.end());
  double loss = 0.0;
  for (int id : dedup) {
    if (id < 0 || id >= static_cast<int>(vocab_probs.size())) {
      throw InputError("plan_loss: gold id out of vocabulary");
    }
    loss -= std::log(std::max(vocab_probs[id], kLogFloor));
  }
  return loss;
}

double nsp_loss(double prob, int label) {
  if (label != 0 && label != 1) throw InputError("nsp_loss: label must be 0 or 1");
  const double p = label == 1 ? prob : 1.0 - prob;
  return -std::log(std::max(p, kLogFloor));
}

std::vector<double> mix_distributions(double gate, const std::vector<double>& alpha,
                                      const std::vector<int>& keyword_ids,
                                      const std::vector<double>& lm_probs) {
  if (alpha.size() != keyword_ids.size()) {
    throw InputError("mix_distributions: alpha and keyword id counts differ");
  }
  std::vector<double> out(lm_probs.size(), 0.0);
  for (size_t k = 0; k < keyword_ids.size(); ++k) {
    const int id = keyword_ids[k];
    if (id < 0 || id >= static_cast<int>(lm_probs.size())) {
      throw InputError("mix_distributions: keyword id out of vocab");
    }
    out[id] += alpha[k];  // repeated ids accumulate
  }
  for (size_t i = 0; i < out.size(); ++i) out[i] = gate * out[i] + (1.0 - gate) * lm_probs[i];
  return out;
}

double generation_loss(const std::vector<std::vector<double>>& mixed_per_step,
                       const std::vector<int>& gold_ids) {
  if (mixed_per_step.size() != gold_ids.size()) {
    throw InputError("generation_loss: step count does not match gold length");
  }
  double loss = 0.0;
  for (size_t i = 0; i < gold_ids.size(); ++i) {
    const int id = gold_ids[i];
    if (id < 0 || id >= static_cast<int>(mixed_per_step[i].size())) {
      throw InputError("generation_loss: gold id out of vocabulary");
    }
    loss -= std::log(std::max(mixed_per_step[i][id], kLogFloor));
  }
  return loss;
}

double total_loss(double l_plan, double l_next, double l_gen, double lambda_plan,
                  double lambda_next) {
  if (lambda_plan < 0.0 || lambda_next < 0.0) {
    throw InputError("total_loss: lambda weights must be >= 0");
  }
  return lambda_plan * l_plan + lambda_next * l_next + l_gen;
}

}  // namespace ssp::planner
