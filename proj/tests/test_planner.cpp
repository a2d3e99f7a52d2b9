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
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "doctest.h"
#include "ssplanner/errors.hpp"
#include "ssplanner/planner.hpp"
#include "ssplanner/rng.hpp"
#include "testutil.hpp"

using namespace ssp;
using namespace ssp::planner;

namespace {

ModelConfig micro_config(int vocab_size) {
  ModelConfig cfg;
  cfg.vocab_size = vocab_size;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.d_model = 8;
  cfg.d_pos = 4;
  cfg.max_seq = 48;
  cfg.max_para = 8;
  cfg.train_nkps = 2;
  cfg.t_max = 2;
  return cfg;
}

struct Fixture {
  std::vector<corpus::Paragraph> paragraphs = ssptest::tiny_corpus(4, 5);
  corpus::Vocabulary vocab = ssptest::vocab_for(paragraphs);
  std::vector<parcom::MaskedInstance> instances = ssptest::instances_for(paragraphs, 2);

  Model model() const { return Model(micro_config(vocab.size()), vocab, 7); }
  EncodedInstance encoded(const Model& m, size_t i = 0) const {
    return encode_instance(instances.at(i), m.vocab(), m.config());
  }
};

void zero_params(Model& m) { m.mutable_params().zero_(); }

}  // namespace

TEST_SUITE_BEGIN("planner");

TEST_CASE("encode_context: single sentence context equals its own row") {
  Fixture fx;
  Model m = fx.model();
  // Build an instance whose context is one sentence: l=4 paragraph has only
  // t=1 masks, so take a crafted 2-context instance and slice.
  EncodedInstance enc = fx.encoded(m);
  enc.context.resize(1);
  const auto ctx = m.encode_context(enc);
  REQUIRE(ctx.h_rows.rows == 1);
  CHECK(ctx.h_c == ctx.h_rows);
}

TEST_CASE("encode_context is invariant to context feeding order") {
  Fixture fx;
  Model m = fx.model();
  parcom::MaskedInstance shuffled = fx.instances[0];
  std::reverse(shuffled.context.begin(), shuffled.context.end());
  const auto a = m.encode_context(fx.encoded(m));
  const auto b = m.encode_context(encode_instance(shuffled, m.vocab(), m.config()));
  CHECK(a.h_c == b.h_c);  // bitwise: encoding sorts by original position
}

TEST_CASE("encode_context: same tokens at different positions differ") {
  Fixture fx;
  Model m = fx.model();
  EncodedInstance enc = fx.encoded(m);
  REQUIRE(enc.context.size() >= 2);
  EncodedInstance twin = enc;
  twin.context[1].ids = twin.context[0].ids;  // same tokens, different pos
  const auto ctx = m.encode_context(twin);
  bool differs = false;
  for (int j = 0; j < ctx.h_rows.cols; ++j) {
    if (ctx.h_rows.at(0, j) != ctx.h_rows.at(1, j)) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("encode_context rejects positions beyond the embedding table") {
  Fixture fx;
  Model m = fx.model();
  EncodedInstance enc = fx.encoded(m);
  enc.context[0].pos = m.config().max_para;
  CHECK_THROWS_AS(m.encode_context(enc), InputError);
}

TEST_CASE("predict_plan: zero weights give the uniform distribution") {
  Fixture fx;
  Model m = fx.model();
  zero_params(m);
  const auto pred = m.predict_plan(fx.encoded(m), 3);
  const double uniform = 1.0 / m.vocab().size();
  for (double p : pred.vocab_probs) CHECK(p == doctest::Approx(uniform).epsilon(1e-12));
  // specials excluded from the top-k; uniform ties resolve to lowest ids
  REQUIRE(pred.top_keywords.size() == 3);
  CHECK(pred.top_keywords[0].first == corpus::kNumSpecials);
  CHECK(pred.top_keywords[1].first == corpus::kNumSpecials + 1);
}

TEST_CASE("predict_plan distribution sums to one for random weights") {
  Fixture fx;
  Model m = fx.model();
  const auto pred = m.predict_plan(fx.encoded(m), 4);
  double total = 0.0;
  for (double p : pred.vocab_probs) {
    total += p;
    CHECK(p >= 0.0);
  }
  CHECK(std::fabs(total - 1.0) <= 1e-6);
  // top-k really is the argmax set over non-specials
  std::vector<std::pair<double, int>> ranked;
  for (int id = corpus::kNumSpecials; id < m.vocab().size(); ++id) {
    ranked.push_back({-pred.vocab_probs[id], id});
  }
  std::sort(ranked.begin(), ranked.end());
  for (size_t i = 0; i < pred.top_keywords.size(); ++i) {
    CHECK(pred.top_keywords[i].first == ranked[i].second);
  }
  CHECK_THROWS_AS(m.predict_plan(fx.encoded(m), 0), InputError);
  CHECK_THROWS_AS(m.predict_plan(fx.encoded(m), m.vocab().size()), InputError);
}

TEST_CASE("plan_loss closed forms") {
  std::vector<double> uniform(100, 0.01);
  CHECK(plan_loss(uniform, {3, 40, 77}) == doctest::Approx(13.815510557964275).epsilon(1e-12));
  // duplicates deduplicate before summing
  CHECK(plan_loss(uniform, {3, 3, 40, 77, 77}) ==
        doctest::Approx(13.815510557964275).epsilon(1e-12));

  std::vector<double> confident(10, 1e-9);
  confident[4] = 1.0 - 9e-9;
  CHECK(plan_loss(confident, {4}) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(plan_loss(confident, {4}) >= 0.0);

  CHECK_THROWS_AS(plan_loss(uniform, {}), InputError);
  CHECK_THROWS_AS(plan_loss(uniform, {100}), InputError);
}

TEST_CASE("nsp head: zero weights sit at 0.5 and the losses match closed forms") {
  Fixture fx;
  Model m = fx.model();
  zero_params(m);
  CHECK(m.nsp_predict(fx.encoded(m)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(nsp_loss(0.5, 0) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
  CHECK(nsp_loss(0.5, 1) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
  CHECK(nsp_loss(0.9, 1) == doctest::Approx(0.10536051565782628).epsilon(1e-12));
  CHECK_THROWS_AS(nsp_loss(0.5, 2), InputError);
}

TEST_CASE("copy gate saturates and stays inside (0,1)") {
  Fixture fx;
  Model m = fx.model();
  zero_params(m);
  const auto enc = fx.encoded(m);
  const auto ctx = m.encode_context(enc);
  Tensor state(1, m.config().d_model);
  std::vector<double> khat(m.config().p_max(), 0.0);

  CHECK(m.copy_gate(ctx.h_c, khat, 0, state) == doctest::Approx(0.5).epsilon(1e-12));

  m.mutable_params().gate_b.at(0, 0) = -40.0;
  const double low = m.copy_gate(ctx.h_c, khat, 0, state);
  CHECK(low < 1e-12);
  CHECK(low > 0.0);

  m.mutable_params().gate_b.at(0, 0) = 40.0;
  CHECK(m.copy_gate(ctx.h_c, khat, 0, state) > 1.0 - 1e-12);

  CHECK_THROWS_AS(m.copy_gate(ctx.h_c, {0.0}, 0, state), InputError);
  CHECK_THROWS_AS(m.copy_gate(ctx.h_c, khat, m.config().max_para, state), InputError);
}

TEST_CASE("plan attention: softmax over keywords") {
  Fixture fx;
  Model m = fx.model();
  Rng state_rng(3);
  Tensor state(1, m.config().d_model);
  state.fill_uniform(state_rng, -1, 1);  // any state

  const auto single = m.plan_attention(state, 0, {0.7}, {9});
  REQUIRE(single.size() == 1);
  CHECK(single[0] == 1.0);

  zero_params(m);  // all scores zero -> uniform
  const auto quad = m.plan_attention(state, 1, {0.1, 0.2, 0.3, 0.4}, {5, 6, 7, 8});
  for (double a : quad) CHECK(a == doctest::Approx(0.25).epsilon(1e-12));

  Model m2 = fx.model();
  const auto rand4 = m2.plan_attention(state, 1, {0.1, 0.2, 0.3, 0.4}, {5, 6, 7, 8});
  double total = 0;
  for (double a : rand4) {
    CHECK(a >= 0.0);
    total += a;
  }
  CHECK(std::fabs(total - 1.0) <= 1e-6);
  CHECK_THROWS_AS(m.plan_attention(state, 0, {}, {}), InputError);
}

TEST_CASE("mix_distributions matches the worked pointer-generator example") {
  std::vector<double> lm(10, 0.1);
  const auto mixed = mix_distributions(0.5, {0.6, 0.4}, {7, 9}, lm);
  for (int i = 0; i < 10; ++i) {
    if (i == 7) {
      CHECK(mixed[i] == doctest::Approx(0.35).epsilon(1e-12));
    } else if (i == 9) {
      CHECK(mixed[i] == doctest::Approx(0.25).epsilon(1e-12));
    } else {
      CHECK(mixed[i] == doctest::Approx(0.05).epsilon(1e-12));
    }
  }
}

TEST_CASE("mix_distributions: gate extremes reduce bit-exactly") {
  Rng rng(21);
  for (int iter = 0; iter < 50; ++iter) {
    const int v = 8 + static_cast<int>(rng.next_below(40));
    std::vector<double> lm(v);
    double total = 0;
    for (double& x : lm) {
      x = rng.next_unit() + 1e-9;
      total += x;
    }
    for (double& x : lm) x /= total;
    const int nk = 1 + static_cast<int>(rng.next_below(4));
    std::vector<double> alpha(nk);
    std::vector<int> ids(nk);
    double at = 0;
    for (int k = 0; k < nk; ++k) {
      alpha[k] = rng.next_unit() + 1e-9;
      at += alpha[k];
      ids[k] = static_cast<int>(rng.next_below(v));
    }
    for (double& a : alpha) a /= at;

    const auto lm_only = mix_distributions(0.0, alpha, ids, lm);
    CHECK(lm_only == lm);  // bitwise

    const auto copy_only = mix_distributions(1.0, alpha, ids, lm);
    std::vector<double> expected(v, 0.0);
    for (int k = 0; k < nk; ++k) expected[ids[k]] += alpha[k];
    CHECK(copy_only == expected);  // bitwise

    const auto blended = mix_distributions(0.37, alpha, ids, lm);
    double s = 0;
    for (double x : blended) {
      CHECK(x >= 0.0);
      s += x;
    }
    CHECK(std::fabs(s - 1.0) <= 1e-6);
  }
  CHECK_THROWS_AS(mix_distributions(0.5, {1.0}, {99}, std::vector<double>(10, 0.1)), InputError);
}

TEST_CASE("generation_loss closed forms") {
  std::vector<std::vector<double>> steps(5, std::vector<double>(100, 0.01));
  CHECK(generation_loss(steps, {1, 2, 3, 4, 5}) ==
        doctest::Approx(23.02585092994046).epsilon(1e-12));
  std::vector<std::vector<double>> perfect(3, std::vector<double>(10, 0.0));
  for (auto& p : perfect) p[2] = 1.0;
  CHECK(generation_loss(perfect, {2, 2, 2}) == 0.0);
  CHECK(generation_loss(steps, {0, 0, 0, 0, 0}) >= 0.0);
  CHECK_THROWS_AS(generation_loss(steps, {1, 2}), InputError);
}

TEST_CASE("total_loss combines the weighted objectives") {
  CHECK(total_loss(2.0, 1.0, 3.0, 0.0, 0.0) == 3.0);
  CHECK(total_loss(2.0, 1.0, 3.0, 1.0, 1.0) == 6.0);
  // scaling lambda_plan scales the plan term exactly
  CHECK(total_loss(2.0, 1.0, 3.0, 2.0, 1.0) - total_loss(2.0, 1.0, 3.0, 1.0, 1.0) == 2.0);
  CHECK_THROWS_AS(total_loss(1, 1, 1, -0.5, 0), InputError);
}

TEST_CASE("training keywords: flat order filtered to top-ranked per sentence") {
  parcom::MaskedInstance inst;
  inst.plan.per_sentence = {{"alpha", "beta", "gamma"}, {"delta", "alpha"}};
  inst.plan.flat = {"gamma", "delta", "alpha", "beta"};
  // train_nkps=2 keeps {alpha,beta} and {delta,alpha}; flat order filters to
  // delta, alpha, beta.
  CHECK(training_keywords(inst, 2) == std::vector<std::string>{"delta", "alpha", "beta"});
}

TEST_CASE("per-step training distributions are valid probability vectors") {
  Fixture fx;
  Model m = fx.model();
  for (size_t i = 0; i < 3; ++i) {
    const auto dists = m.training_step_distributions(fx.encoded(m, i));
    REQUIRE_FALSE(dists.empty());
    for (const auto& d : dists) {
      double total = 0;
      for (double p : d) {
        CHECK(p >= 0.0);
        total += p;
      }
      CHECK(std::fabs(total - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("loss breakdown: negatives carry only the NSP term") {
  Fixture fx;
  Model m = fx.model();
  auto negatives = parcom::make_nsp_negatives(fx.instances, 3);
  bool saw_negative = false;
  for (const auto& inst : negatives) {
    const auto enc = encode_instance(inst, m.vocab(), m.config());
    const auto lb = m.loss(enc, 1.0, 0.5);
    if (inst.is_negative_nsp) {
      saw_negative = true;
      CHECK_FALSE(lb.full);
      CHECK(lb.gen == 0.0);
      CHECK(lb.plan == 0.0);
      CHECK(lb.total == doctest::Approx(0.5 * lb.nsp).epsilon(1e-12));
    } else {
      CHECK(lb.full);
      CHECK(lb.gen > 0.0);
      CHECK(lb.total ==
            doctest::Approx(1.0 * lb.plan + 0.5 * lb.nsp + lb.gen).epsilon(1e-9));
    }
  }
  CHECK(saw_negative);
}

namespace {

// Central finite differences over every parameter of the model.
void model_gradcheck(Model& m, const EncodedInstance& enc, double lp, double ln,
                     bool include_gen, double h = 1e-5, double rel_tol = 1e-3) {
  Params analytic = Params::shaped(m.config());
  m.loss_and_gradients(enc, lp, ln, analytic, include_gen);

  std::vector<Tensor*> params;
  visit_params(m.mutable_params(), [&](const std::string&, Tensor& t) { params.push_back(&t); });
  std::vector<Tensor*> grads;
  visit_params(analytic, [&](const std::string&, Tensor& t) { grads.push_back(&t); });

  int checked = 0, failed = 0;
  for (size_t ti = 0; ti < params.size(); ++ti) {
    Tensor& t = *params[ti];
    for (size_t j = 0; j < t.count(); ++j) {
      const double orig = t.data[j];
      t.data[j] = orig + h;
      const double up = m.loss(enc, lp, ln, include_gen).total;
      t.data[j] = orig - h;
      const double down = m.loss(enc, lp, ln, include_gen).total;
      t.data[j] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grads[ti]->data[j];
      ++checked;
      // Relative tolerance with an absolute floor: central differences carry
      // ~eps*|L|/h of roundoff, so near-zero partials cannot meet a purely
      // relative bound.
      if (std::fabs(numeric - a) > 1e-7 + rel_tol * std::max(std::fabs(numeric), std::fabs(a))) {
        ++failed;
      }
    }
  }
  CHECK(checked > 500);
  CHECK(failed == 0);
}

}  // namespace

TEST_CASE("full-model gradients match finite differences") {
  Fixture fx;
  for (uint64_t seed : {11ull, 12ull, 13ull}) {
    Model m(micro_config(fx.vocab.size()), fx.vocab, seed);
    const auto enc = fx.encoded(m, seed % fx.instances.size());
    model_gradcheck(m, enc, 1.0, 0.5, true);
  }
}

TEST_CASE("gradients scale linearly in lambda_plan") {
  Fixture fx;
  Model m = fx.model();
  const auto enc = fx.encoded(m);
  Params g1 = Params::shaped(m.config());
  Params g2 = Params::shaped(m.config());
  m.loss_and_gradients(enc, 1.0, 0.0, g1, false);  // plan only
  m.loss_and_gradients(enc, 2.0, 0.0, g2, false);
  // d(2 L_plan) = 2 d(L_plan) on the plan path
  CHECK(g2.plan_w.data[0] == doctest::Approx(2.0 * g1.plan_w.data[0]).epsilon(1e-9));
  double max_resid = 0.0;
  for (size_t i = 0; i < g1.tok_emb.data.size(); ++i) {
    max_resid = std::max(max_resid,
                         std::fabs(g2.tok_emb.data[i] - 2.0 * g1.tok_emb.data[i]));
  }
  CHECK(max_resid <= 1e-12);
}

TEST_CASE("zero-loss generation leaves no gradient on the LM head") {
  // With include_gen=false the generation path contributes nothing.
  Fixture fx;
  Model m = fx.model();
  Params g = Params::shaped(m.config());
  m.loss_and_gradients(fx.encoded(m), 1.0, 0.0, g, false);
  for (double x : g.lm_w.data) CHECK(x == 0.0);
  for (double x : g.gate_w.data) CHECK(x == 0.0);
}

TEST_CASE("SP ablation: sentence position rows receive zero gradient") {
  Fixture fx;
  ModelConfig cfg = micro_config(fx.vocab.size());
  cfg.use_sentence_pos = false;
  Model m(cfg, fx.vocab, 5);
  Params g = Params::shaped(cfg);
  m.loss_and_gradients(encode_instance(fx.instances[0], m.vocab(), cfg), 1.0, 0.5, g);
  for (double x : g.sent_pos_emb.data) CHECK(x == 0.0);
  // feeding-order invariance still holds
  parcom::MaskedInstance rev = fx.instances[0];
  std::reverse(rev.context.begin(), rev.context.end());
  CHECK(m.encode_context(encode_instance(fx.instances[0], m.vocab(), cfg)).h_c ==
        m.encode_context(encode_instance(rev, m.vocab(), cfg)).h_c);
}

TEST_CASE("non-finite parameters raise NumericError during training passes") {
  Fixture fx;
  Model m = fx.model();
  m.mutable_params().lm_b.data[0] = std::numeric_limits<double>::quiet_NaN();
  Params g = Params::shaped(m.config());
  CHECK_THROWS_AS(m.loss_and_gradients(fx.encoded(m), 1.0, 0.5, g), NumericError);
}

TEST_CASE("greedy decode is deterministic; nucleus decode is seed-deterministic") {
  Fixture fx;
  Model m = fx.model();
  DecodeOptions greedy;
  greedy.max_len = 6;
  const auto a = m.decode_targets(fx.instances[0], greedy);
  const auto b = m.decode_targets(fx.instances[0], greedy);
  CHECK(a.sentences == b.sentences);
  REQUIRE(a.sentences.size() == fx.instances[0].target.size());

  DecodeOptions nucleus;
  nucleus.mode = DecodeOptions::Mode::kNucleus;
  nucleus.top_p = 1.0;  // full-distribution sampling
  nucleus.max_len = 6;
  nucleus.seed = 99;
  const auto c = m.decode_targets(fx.instances[0], nucleus);
  const auto d = m.decode_targets(fx.instances[0], nucleus);
  CHECK(c.sentences == d.sentences);

  nucleus.seed = 100;
  nucleus.top_p = 0.9;
  const auto e = m.decode_targets(fx.instances[0], nucleus);
  CHECK(e.sentences.size() == c.sentences.size());

  DecodeOptions bad;
  bad.max_len = 0;
  CHECK_THROWS_AS(m.decode_targets(fx.instances[0], bad), InputError);
  DecodeOptions badp;
  badp.mode = DecodeOptions::Mode::kNucleus;
  badp.top_p = 0.0;
  CHECK_THROWS_AS(m.decode_targets(fx.instances[0], badp), InputError);
}

TEST_CASE("forced gate=1 with a single keyword copies it until max_len") {
  Fixture fx;
  Model m = fx.model();
  DecodeOptions opts;
  opts.max_len = 5;
  opts.force_gate = 1.0;
  opts.provided_keywords = std::vector<std::string>{"lantern"};
  const auto out = m.decode_targets(fx.instances[0], opts);
  for (const auto& sentence : out.sentences) {
    REQUIRE(sentence.size() == 5);  // the copy path never emits EOS
    for (const auto& tok : sentence) CHECK(tok == "lantern");
  }
  CHECK(out.keywords_used == std::vector<std::string>{"lantern"});
}

TEST_CASE("decode traces expose valid gates and attention") {
  Fixture fx;
  Model m = fx.model();
  std::vector<DecodeStepTrace> trace;
  DecodeOptions opts;
  opts.max_len = 4;
  opts.provided_keywords = std::vector<std::string>{"lantern", "mara"};
  opts.trace = &trace;
  m.decode_targets(fx.instances[0], opts);
  REQUIRE_FALSE(trace.empty());
  for (const auto& step : trace) {
    CHECK(step.gate >= 0.0);
    CHECK(step.gate <= 1.0);
    double total = 0;
    for (double a : step.alpha) total += a;
    CHECK(std::fabs(total - 1.0) <= 1e-6);
  }
}

TEST_CASE("empty keyword set decodes as a pure language model") {
  Fixture fx;
  Model m = fx.model();
  DecodeOptions opts;
  opts.max_len = 4;
  opts.provided_keywords = std::vector<std::string>{};
  std::vector<DecodeStepTrace> trace;
  opts.trace = &trace;
  const auto out = m.decode_targets(fx.instances[0], opts);
  CHECK(out.keywords_used.empty());
  for (const auto& step : trace) CHECK(step.alpha.empty());
}

TEST_CASE("predicted keywords flow into decoding when none are provided") {
  Fixture fx;
  Model m = fx.model();
  DecodeOptions opts;
  opts.max_len = 4;
  const auto out = m.decode_targets(fx.instances[0], opts);
  const int expected =
      m.config().train_nkps * static_cast<int>(fx.instances[0].target.size());
  CHECK(static_cast<int>(out.keywords_used.size()) == expected);
}

TEST_CASE("attention extraction: uniform attention falls back to the tie-break order") {
  Fixture fx;
  ModelConfig cfg = micro_config(fx.vocab.size());
  Model m(cfg, fx.vocab, 3);
  // zero q/k projections give uniform attention within every causal prefix
  for (auto& layer : m.mutable_params().layers) {
    layer.attn_wq.zero_();
    layer.attn_bq.zero_();
    layer.attn_wk.zero_();
    layer.attn_bk.zero_();
  }
  const auto scored = m.attention_received(fx.instances[0]);
  REQUIRE(scored.size() >= 2);
  const auto top = planex::extract_attention(m, fx.instances[0], 3);
  REQUIRE(top.size() == 3);
  // all words tie, so the lexicographic tie-break decides
  CHECK(top[0] <= top[1]);
  CHECK(top[1] <= top[2]);
}

TEST_CASE("attention extraction equals the hand-averaged head-0 maps") {
  Fixture fx;
  ModelConfig cfg = micro_config(fx.vocab.size());
  cfg.layers = 2;  // exercise the mean over layers
  Model m(cfg, fx.vocab, 17);
  const auto& inst = fx.instances[1];

  std::vector<int> seq;
  const auto maps = m.attention_head0_maps(inst, &seq);
  REQUIRE(maps.size() == 2);

  // Oracle: average the two layer maps by hand and re-derive the scores.
  const int n = static_cast<int>(seq.size());
  Tensor mean(n, n);
  mean.add_(maps[0]);
  mean.add_(maps[1]);
  mean.scale_(0.5);

  EncodedInstance enc = encode_instance(inst, m.vocab(), m.config());
  std::map<std::string, double> best;
  int pos = 1;
  std::vector<std::pair<int, std::string>> ctx_words;
  for (const auto& s : enc.context) {
    for (int id : s.ids) {
      const std::string tok = m.vocab().token_of(id);
      bool word = false;
      for (unsigned char c : tok) {
        if (std::isalnum(c) != 0) word = true;
      }
      if (id >= corpus::kNumSpecials && word) ctx_words.emplace_back(pos, tok);
      ++pos;
    }
    ++pos;
  }
  std::vector<int> tgt_pos;
  for (const auto& s : enc.target) {
    for (size_t i = 0; i < s.ids.size(); ++i) tgt_pos.push_back(pos++);
    ++pos;
  }
  for (const auto& [cpos, tok] : ctx_words) {
    double sum = 0;
    for (int tp : tgt_pos) sum += mean.at(tp, cpos);
    sum /= tgt_pos.size();
    auto it = best.find(tok);
    if (it == best.end() || sum > it->second) best[tok] = sum;
  }

  const auto scored = m.attention_received(inst);
  REQUIRE(scored.size() == best.size());
  for (const auto& sw : scored) {
    CHECK(sw.score == doctest::Approx(best.at(sw.token)).epsilon(1e-12));
  }
}

TEST_CASE("attention extraction refuses a model without attention layers") {
  Fixture fx;
  ModelConfig cfg = micro_config(fx.vocab.size());
  cfg.layers = 0;
  Model m(cfg, fx.vocab, 1);
  CHECK_THROWS_AS(planex::extract_attention(m, fx.instances[0], 3), InputError);
}

TEST_SUITE_END();
