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

#include "ssplanner/parcom.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "ssplanner/errors.hpp"
#include "ssplanner/rng.hpp"

namespace ssp::parcom {

std::vector<MaskSpec> enumerate_masks(int paragraph_len, int t_max) {
  if (paragraph_len < 2) throw InputError("enumerate_masks: paragraph length must be >= 2");
  if (t_max < 1) throw InputError("enumerate_masks: t_max must be >= 1");
  std::vector<MaskSpec> specs;
  for (int t = 1; t <= t_max; ++t) {
    if (paragraph_len - t <= t) break;  // context must stay strictly larger
    for (int start = 0; start + t <= paragraph_len; ++start) {
      specs.push_back({start, t});
    }
  }
  return specs;
}

MaskedInstance make_instance(const corpus::Paragraph& paragraph, const MaskSpec& spec,
                             planex::KeywordPlan plan) {
  const int l = static_cast<int>(paragraph.sentences.size());
  if (spec.t < 1 || spec.start < 0 || spec.start + spec.t > l) {
    throw InputError("make_instance: mask spec out of range for paragraph of length " +
                     std::to_string(l));
  }
  if (l - spec.t <= spec.t) {
    throw InputError("make_instance: mask leaves too little context (need c > t)");
  }
  MaskedInstance inst;
  inst.doc_id = paragraph.doc_id;
  inst.para_index = paragraph.para_index;
  inst.paragraph_len = l;
  inst.plan = std::move(plan);
  for (int i = 0; i < l; ++i) {
    PositionedSentence ps{i, paragraph.sentences[i]};
    if (i >= spec.start && i < spec.start + spec.t) {
      inst.target.push_back(std::move(ps));
    } else {
      inst.context.push_back(std::move(ps));
    }
  }
  return inst;
}

namespace {

std::string paragraph_key(const MaskedInstance& inst) {
  return inst.doc_id + "\x1f" + std::to_string(inst.para_index);
}

// Rebuild the full sentence list of an instance's source paragraph; context
// plus target cover every position exactly once.
std::vector<corpus::Sentence> reconstruct_paragraph(const MaskedInstance& inst) {
  std::vector<corpus::Sentence> sentences(inst.paragraph_len);
  for (const auto& ps : inst.context) sentences[ps.pos] = ps.sentence;
  for (const auto& ps : inst.target) sentences[ps.pos] = ps.sentence;
  return sentences;
}

}  // namespace

std::vector<MaskedInstance> make_nsp_negatives(std::vector<MaskedInstance> instances,
                                               uint64_t rng_seed,
                                               const PlanExtractor& plan_extractor) {
  // Donor spans come from other paragraphs, reconstructed once up front.
  std::map<std::string, std::vector<corpus::Sentence>> paragraphs;
  for (const MaskedInstance& inst : instances) {
    auto key = paragraph_key(inst);
    if (paragraphs.find(key) == paragraphs.end()) {
      paragraphs.emplace(std::move(key), reconstruct_paragraph(inst));
    }
  }
  if (paragraphs.size() < 2) {
    throw InputError("make_nsp_negatives: need at least two source paragraphs");
  }
  std::vector<const std::string*> keys;
  keys.reserve(paragraphs.size());
  for (const auto& [key, sentences] : paragraphs) keys.push_back(&key);

  Rng rng(rng_seed);
  std::vector<size_t> order(instances.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const size_t n_negative = instances.size() / 2;

  for (size_t pick = 0; pick < n_negative; ++pick) {
    MaskedInstance& inst = instances[order[pick]];
    const std::string own_key = paragraph_key(inst);
    const int t = static_cast<int>(inst.target.size());

    // Uniform over the other paragraphs; every kept paragraph has >= 4
    // sentences, so any t <= 3 span fits.
    const std::string* donor_key = keys[rng.next_below(keys.size())];
    while (*donor_key == own_key) donor_key = keys[rng.next_below(keys.size())];
    const auto& donor = paragraphs.at(*donor_key);
    if (static_cast<int>(donor.size()) < t) {
      throw InputError("make_nsp_negatives: donor paragraph shorter than target span");
    }
    const int start = static_cast<int>(rng.next_below(donor.size() - t + 1));

    std::vector<corpus::Sentence> span(donor.begin() + start, donor.begin() + start + t);
    for (int i = 0; i < t; ++i) inst.target[i].sentence = span[i];
    inst.is_negative_nsp = true;
    inst.plan = plan_extractor ? plan_extractor(span) : planex::KeywordPlan{};
  }
  return instances;
}

std::string instance_id(const MaskedInstance& instance) {
  std::ostringstream id;
  id << instance.doc_id << ":" << instance.para_index << ":"
     << (instance.target.empty() ? -1 : instance.target.front().pos) << ":"
     << instance.target.size();
  return id.str();
}

namespace {

nlohmann::json positioned_to_json(const std::vector<PositionedSentence>& list) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& ps : list) {
    arr.push_back({{"pos", ps.pos}, {"tokens", ps.sentence.tokens}});
  }
  return arr;
}

std::vector<PositionedSentence> positioned_from_json(const nlohmann::json& arr) {
  std::vector<PositionedSentence> out;
  for (const auto& item : arr) {
    PositionedSentence ps;
    ps.pos = item.at("pos").get<int>();
    ps.sentence.tokens = item.at("tokens").get<std::vector<std::string>>();
    for (const auto& tok : ps.sentence.tokens) {
      ps.sentence.raw += (ps.sentence.raw.empty() ? "" : " ") + tok;
    }
    out.push_back(std::move(ps));
  }
  return out;
}

}  // namespace

std::string instance_to_jsonl(const MaskedInstance& instance) {
  nlohmann::json j;
  j["doc_id"] = instance.doc_id;
  j["para_index"] = instance.para_index;
  j["context"] = positioned_to_json(instance.context);
  j["target"] = positioned_to_json(instance.target);
  j["plan"] = {{"per_sentence", instance.plan.per_sentence}, {"flat", instance.plan.flat}};
  j["negative"] = instance.is_negative_nsp;
  return j.dump();
}

MaskedInstance instance_from_jsonl(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset line is not valid JSON: ") + e.what());
  }
  MaskedInstance inst;
  try {
    inst.doc_id = j.at("doc_id").get<std::string>();
    inst.para_index = j.at("para_index").get<int>();
    inst.context = positioned_from_json(j.at("context"));
    inst.target = positioned_from_json(j.at("target"));
    inst.plan.per_sentence = j.at("plan").at("per_sentence").get<std::vector<std::vector<std::string>>>();
    inst.plan.flat = j.at("plan").at("flat").get<std::vector<std::string>>();
    inst.is_negative_nsp = j.at("negative").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset line missing fields: ") + e.what());
  }
  inst.paragraph_len = static_cast<int>(inst.context.size() + inst.target.size());
  return inst;
}

void write_instances(const std::vector<MaskedInstance>& instances, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path);
  for (const MaskedInstance& inst : instances) {
    out << instance_to_jsonl(inst) << '\n';
  }
  if (!out) throw InputError("write failed: " + path);
}

std::vector<MaskedInstance> read_instances(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset: " + path);
  std::vector<MaskedInstance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(instance_from_jsonl(line));
  }
  return out;
}

}  // namespace ssp::parcom
