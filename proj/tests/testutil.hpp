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

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ssplanner/corpus.hpp"
#include "ssplanner/parcom.hpp"
#include "ssplanner/planex.hpp"
#include "ssplanner/planner.hpp"

namespace ssptest {

inline std::string data_dir() { return SSP_DATA_DIR; }

// Fresh temp directory under the build tree; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::path(SSP_TMP_DIR) /
            (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline ssp::corpus::Sentence sent(const std::string& raw) { return ssp::corpus::tokenize(raw); }

inline ssp::corpus::Paragraph make_paragraph(const std::vector<std::string>& raws,
                                             const std::string& doc = "doc", int index = 0) {
  ssp::corpus::Paragraph p;
  p.doc_id = doc;
  p.para_index = index;
  for (const auto& r : raws) p.sentences.push_back(sent(r));
  return p;
}

// Small deterministic corpus of distinct paragraphs for dataset-level tests.
inline std::vector<ssp::corpus::Paragraph> tiny_corpus(int n_paragraphs, int len = 4) {
  static const char* names[] = {"mara", "doran", "tessa", "brin", "aldric", "wren"};
  static const char* things[] = {"lantern", "dagger", "ledger", "amulet", "compass", "satchel"};
  static const char* spots[] = {"harbor", "market", "chapel", "tavern", "mill", "orchard"};
  std::vector<ssp::corpus::Paragraph> out;
  for (int i = 0; i < n_paragraphs; ++i) {
    const std::string h = names[i % 6];
    const std::string o = things[(i * 5 + 1) % 6];
    const std::string p = spots[(i * 7 + 2) % 6];
    std::vector<std::string> raws = {
        h + " walked to the " + p + " at dusk .",
        "a faded " + o + " lay near the " + p + " gate .",
        h + " lifted the " + o + " with care .",
        h + " carried the " + o + " back to the " + p + " .",
        "the " + p + " bells rang for " + h + " .",
        "people at the " + p + " cheered for " + h + " .",
        h + " sold the " + o + " at the " + p + " fair .",
    };
    raws.resize(len);
    out.push_back(make_paragraph(raws, "doc", i));
  }
  return out;
}

// Instances with off-the-shelf plans for every mask of every paragraph.
inline std::vector<ssp::parcom::MaskedInstance> instances_for(
    const std::vector<ssp::corpus::Paragraph>& paragraphs, int t_max, int extract_nkps = 5) {
  const ssp::planex::Stopwords sw = ssp::planex::builtin_test_stopwords();
  std::vector<ssp::parcom::MaskedInstance> out;
  for (const auto& para : paragraphs) {
    const int l = static_cast<int>(para.sentences.size());
    for (const auto& spec : ssp::parcom::enumerate_masks(l, t_max)) {
      ssp::parcom::MaskedInstance inst = ssp::parcom::make_instance(para, spec, {});
      std::vector<std::vector<std::string>> per_sentence;
      for (const auto& ps : inst.target) {
        per_sentence.push_back(
            ssp::planex::extract_offtheshelf(ps.sentence, extract_nkps, sw));
      }
      inst.plan = ssp::planex::finalize_plan(per_sentence, extract_nkps,
                                             1000 + out.size());
      out.push_back(std::move(inst));
    }
  }
  return out;
}

inline ssp::corpus::Vocabulary vocab_for(const std::vector<ssp::corpus::Paragraph>& paragraphs,
                                         int max_vocab = 5000) {
  return ssp::corpus::Vocabulary::build(paragraphs, max_vocab);
}

}  // namespace ssptest
