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

#include <benchmark/benchmark.h>

#include "ssplanner/parcom.hpp"
#include "ssplanner/planex.hpp"
#include "ssplanner/planner.hpp"

namespace {

using namespace ssp;

struct BenchSetup {
  corpus::Vocabulary vocab;
  planner::ModelConfig cfg;
  planner::Model model;
  parcom::MaskedInstance instance;
  planner::EncodedInstance encoded;

  static BenchSetup make() {
    std::vector<corpus::Paragraph> paragraphs;
    for (int i = 0; i < 4; ++i) {
      corpus::Paragraph p;
      p.doc_id = "bench";
      p.para_index = i;
      p.sentences = {
          corpus::tokenize("mara walked to the harbor at dusk ."),
          corpus::tokenize("a faded lantern lay near the harbor gate ."),
          corpus::tokenize("mara lifted the lantern with care ."),
          corpus::tokenize("mara carried the lantern back to the harbor ."),
          corpus::tokenize("the harbor bells rang for mara ."),
      };
      paragraphs.push_back(std::move(p));
    }
    corpus::Vocabulary vocab = corpus::Vocabulary::build(paragraphs, 5000);

    planner::ModelConfig cfg;
    cfg.vocab_size = vocab.size();
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.d_model = 64;
    cfg.d_pos = 16;
    cfg.max_seq = 128;
    cfg.max_para = 8;

    parcom::MaskedInstance inst = parcom::make_instance(paragraphs[0], {2, 1}, {});
    const planex::Stopwords sw = planex::builtin_test_stopwords();
    std::vector<std::vector<std::string>> per_sentence;
    for (const auto& ps : inst.target) {
      per_sentence.push_back(planex::extract_offtheshelf(ps.sentence, 5, sw));
    }
    inst.plan = planex::finalize_plan(per_sentence, 5, 1);

    planner::Model model(cfg, vocab, 1);
    planner::EncodedInstance enc = planner::encode_instance(inst, vocab, cfg);
    return {std::move(vocab), cfg, std::move(model), std::move(inst), std::move(enc)};
  }
};

BenchSetup& setup() {
  static BenchSetup s = BenchSetup::make();
  return s;
}

void BM_EncodeContext(benchmark::State& state) {
  auto& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.model.encode_context(s.encoded));
  }
}
BENCHMARK(BM_EncodeContext);

void BM_ForwardLoss(benchmark::State& state) {
  auto& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.model.loss(s.encoded, 1.0, 0.5));
  }
}
BENCHMARK(BM_ForwardLoss);

void BM_ForwardBackward(benchmark::State& state) {
  auto& s = setup();
  planner::Params grads = planner::Params::shaped(s.model.config());
  for (auto _ : state) {
    grads.zero_();
    benchmark::DoNotOptimize(s.model.loss_and_gradients(s.encoded, 1.0, 0.5, grads));
  }
}
BENCHMARK(BM_ForwardBackward);

void BM_GreedyDecode(benchmark::State& state) {
  auto& s = setup();
  planner::DecodeOptions opts;
  opts.max_len = 10;
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.model.decode_targets(s.instance, opts));
  }
}
BENCHMARK(BM_GreedyDecode);

}  // namespace

BENCHMARK_MAIN();
