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

#include "ssplanner/corpus.hpp"
#include "ssplanner/planex.hpp"

namespace {

const ssp::corpus::Sentence& bench_sentence() {
  static const ssp::corpus::Sentence s = ssp::corpus::tokenize(
      "they reached the raised sanctuary with the slab marble altar and the tall backed "
      "cathedra , the bishop ' s seat .");
  return s;
}

const ssp::planex::Stopwords& bench_stopwords() {
  static const ssp::planex::Stopwords sw = ssp::planex::builtin_test_stopwords();
  return sw;
}

void BM_Tokenize(benchmark::State& state) {
  const std::string raw = bench_sentence().raw;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ssp::corpus::tokenize(raw));
  }
}
BENCHMARK(BM_Tokenize);

void BM_ExtractStatistical(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ssp::planex::extract_statistical(bench_sentence(), 5, bench_stopwords()));
  }
}
BENCHMARK(BM_ExtractStatistical);

void BM_ExtractRake(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ssp::planex::extract_graph_rake(bench_sentence(), 5, bench_stopwords()));
  }
}
BENCHMARK(BM_ExtractRake);

void BM_ExtractPositionRank(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ssp::planex::extract_positionrank(bench_sentence(), 5, bench_stopwords()));
  }
}
BENCHMARK(BM_ExtractPositionRank);

void BM_OffTheShelfVote(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ssp::planex::extract_offtheshelf(bench_sentence(), 5, bench_stopwords()));
  }
}
BENCHMARK(BM_OffTheShelfVote);

}  // namespace

BENCHMARK_MAIN();
