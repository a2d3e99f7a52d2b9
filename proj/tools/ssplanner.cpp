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
//
// Command-line pipeline: build-dataset -> train -> generate -> evaluate,
// plus standalone keyword extraction and self-supervision ablations.

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ssplanner/checkpoint.hpp"
#include "ssplanner/config.hpp"
#include "ssplanner/corpus.hpp"
#include "ssplanner/errors.hpp"
#include "ssplanner/evalkit.hpp"
#include "ssplanner/parcom.hpp"
#include "ssplanner/planex.hpp"
#include "ssplanner/planner.hpp"
#include "ssplanner/rng.hpp"
#include "ssplanner/trainer.hpp"

namespace fs = std::filesystem;
using ssp::config::RunConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitFormat = 4;
constexpr int kExitAlignment = 5;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ssp::InputError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ssp::InputError("cannot open for writing: " + path);
  out << content;
  if (!out) throw ssp::InputError("write failed: " + path);
}

struct DatasetPaths {
  std::string train, valid, test, vocab;
};

DatasetPaths dataset_paths(const RunConfig& cfg) {
  const std::string dir = cfg.out_dir();
  return {dir + "/train.jsonl", dir + "/valid.jsonl", dir + "/test.jsonl", dir + "/vocab.json"};
}

std::string checkpoint_path(const RunConfig& cfg) { return cfg.out_dir() + "/checkpoint.sspl"; }

ssp::planex::Stopwords load_stopwords_from(const RunConfig& cfg) {
  const std::string path = cfg.get_string("stopwords", "");
  if (path.empty()) return ssp::planex::builtin_test_stopwords();
  return ssp::planex::load_stopwords(path);
}

// Per-target-sentence candidate keywords (before finalize_plan) for the
// sentence-level extractor families.
std::vector<std::string> extract_for_sentence(const std::string& extractor,
                                              const ssp::corpus::Sentence& sentence, int k,
                                              const ssp::planex::Stopwords& stopwords,
                                              const ssp::planex::PosLexicon& lexicon,
                                              ssp::Rng* random_rng) {
  using namespace ssp::planex;
  if (extractor == "offtheshelf") return extract_offtheshelf(sentence, k, stopwords);
  if (extractor == "statistical") return extract_statistical(sentence, k, stopwords);
  if (extractor == "rake") return extract_graph_rake(sentence, k, stopwords);
  if (extractor == "positionrank") return extract_positionrank(sentence, k, stopwords);
  if (extractor == "noun" || extractor == "verb" || extractor == "nounverb") {
    const auto tags = tag_pos(sentence, lexicon);
    const SyntacticMode mode = extractor == "noun"      ? SyntacticMode::kNoun
                               : extractor == "verb"    ? SyntacticMode::kVerb
                                                        : SyntacticMode::kNounVerb;
    return extract_syntactic(sentence, tags, mode, k);
  }
  if (extractor == "random") {
    // Uniform sample of non-stopword word tokens from the sentence itself.
    std::vector<std::string> candidates;
    for (const std::string& t : sentence.tokens) {
      bool word = false;
      for (unsigned char c : t) {
        if (std::isalnum(c) != 0 || c >= 0x80) word = true;
      }
      if (word && stopwords.count(t) == 0) candidates.push_back(t);
    }
    random_rng->shuffle(candidates);
    if (static_cast<int>(candidates.size()) > k) candidates.resize(k);
    return candidates;
  }
  throw ssp::InputError("unknown extractor: " + extractor);
}

struct PlanBuilder {
  std::string extractor;
  int extract_nkps = 5;
  uint64_t root_seed = 1;
  ssp::planex::Stopwords stopwords;
  ssp::planex::PosLexicon lexicon;
  const ssp::planner::Model* attention_model = nullptr;

  ssp::planex::KeywordPlan plan_for(const std::vector<ssp::corpus::Sentence>& targets,
                                    const std::string& instance_key) const {
    std::vector<std::vector<std::string>> per_sentence;
    if (extractor == "attention") {
      throw ssp::InputError("attention extraction needs full instances, not bare sentences");
    }
    ssp::Rng rng(ssp::derive_seed(root_seed, "plan." + instance_key));
    for (const ssp::corpus::Sentence& s : targets) {
      per_sentence.push_back(
          extract_for_sentence(extractor, s, extract_nkps, stopwords, lexicon, &rng));
    }
    return ssp::planex::finalize_plan(per_sentence, extract_nkps,
                                      ssp::derive_seed(root_seed, "shuffle." + instance_key));
  }

  ssp::planex::KeywordPlan plan_for_instance(const ssp::parcom::MaskedInstance& inst) const {
    if (extractor == "attention") {
      if (attention_model == nullptr) {
        throw ssp::InputError(
            "extractor=attention requires attention_checkpoint pointing at a trained model");
      }
      std::vector<std::vector<std::string>> per_sentence;
      for (const auto& scored : attention_model->attention_received_per_sentence(inst)) {
        std::vector<std::string> list;
        for (const auto& sw : scored) {
          if (static_cast<int>(list.size()) >= extract_nkps) break;
          list.push_back(sw.token);
        }
        per_sentence.push_back(std::move(list));
      }
      return ssp::planex::finalize_plan(
          per_sentence, extract_nkps,
          ssp::derive_seed(root_seed, "shuffle." + ssp::parcom::instance_id(inst)));
    }
    std::vector<ssp::corpus::Sentence> targets;
    for (const auto& ps : inst.target) targets.push_back(ps.sentence);
    return plan_for(targets, ssp::parcom::instance_id(inst));
  }
};

PlanBuilder make_plan_builder(const RunConfig& cfg, ssp::planner::Model** attention_model_out) {
  PlanBuilder pb;
  pb.extractor = cfg.get_string("extractor", "offtheshelf");
  pb.extract_nkps = cfg.get_int("extract_nkps", 5);
  pb.root_seed = cfg.seed();
  pb.stopwords = load_stopwords_from(cfg);
  const std::string lexicon_path = cfg.get_string("pos_lexicon", "");
  if (!lexicon_path.empty()) pb.lexicon = ssp::planex::PosLexicon::load(lexicon_path);
  if (pb.extractor == "attention") {
    const std::string ckpt = cfg.require_string("attention_checkpoint");
    auto* model = new ssp::planner::Model(ssp::trainer::load_checkpoint(ckpt));
    *attention_model_out = model;
    pb.attention_model = model;
  }
  return pb;
}

int cmd_build_dataset(const RunConfig& cfg) {
  const std::string corpus_path = cfg.require_string("corpus");
  const int min_len = cfg.get_int("min_sentences", 4);
  const int max_len = cfg.get_int("max_sentences", 7);
  const bool single_para = cfg.get_bool("single_paragraph_mode", false);
  const int max_vocab = cfg.get_int("max_vocab", 50000);
  const int t_max = cfg.get_int("t_max", 3);
  const double split_train = cfg.get_double("split_train", 0.9);
  const double split_valid = cfg.get_double("split_valid", 0.05);
  const bool sample_negatives = cfg.get_bool("sample_nsp_negatives", true);
  const uint64_t seed = cfg.seed();

  const std::string doc_id = fs::path(corpus_path).stem().string();
  std::vector<ssp::corpus::Paragraph> paragraphs =
      ssp::corpus::segment_paragraphs(read_file(corpus_path), min_len, max_len, single_para,
                                      doc_id);
  if (paragraphs.empty()) throw ssp::InputError("corpus produced no usable paragraphs");

  ssp::Rng split_rng(ssp::derive_seed(seed, "split"));
  split_rng.shuffle(paragraphs);
  const size_t n = paragraphs.size();
  const size_t n_train = static_cast<size_t>(std::floor(split_train * n));
  const size_t n_valid = static_cast<size_t>(std::floor(split_valid * n));
  if (n_train == 0 || n_valid == 0 || n_train + n_valid >= n) {
    throw ssp::InputError("split produced an empty train/valid/test partition");
  }

  std::vector<std::vector<ssp::corpus::Paragraph>> splits(3);
  splits[0].assign(paragraphs.begin(), paragraphs.begin() + n_train);
  splits[1].assign(paragraphs.begin() + n_train, paragraphs.begin() + n_train + n_valid);
  splits[2].assign(paragraphs.begin() + n_train + n_valid, paragraphs.end());

  fs::create_directories(cfg.out_dir());
  const DatasetPaths paths = dataset_paths(cfg);

  const ssp::corpus::Vocabulary vocab = ssp::corpus::Vocabulary::build(splits[0], max_vocab);
  write_file(paths.vocab, vocab.to_json());

  ssp::planner::Model* attention_model = nullptr;
  const PlanBuilder pb = make_plan_builder(cfg, &attention_model);

  const char* split_names[3] = {"train", "valid", "test"};
  const std::string split_files[3] = {paths.train, paths.valid, paths.test};
  for (int si = 0; si < 3; ++si) {
    std::vector<ssp::parcom::MaskedInstance> instances;
    for (const ssp::corpus::Paragraph& para : splits[si]) {
      const int l = static_cast<int>(para.sentences.size());
      for (const ssp::parcom::MaskSpec& spec : ssp::parcom::enumerate_masks(l, t_max)) {
        ssp::parcom::MaskedInstance inst = ssp::parcom::make_instance(para, spec, {});
        inst.plan = pb.plan_for_instance(inst);
        instances.push_back(std::move(inst));
      }
    }
    if (sample_negatives) {
      uint64_t negative_counter = 0;
      instances = ssp::parcom::make_nsp_negatives(
          instances, ssp::derive_seed(seed, std::string("nsp.") + split_names[si]),
          [&](const std::vector<ssp::corpus::Sentence>& span) {
            return pb.plan_for(span, std::string("negative.") + split_names[si] + "." +
                                         std::to_string(negative_counter++));
          });
    }
    ssp::parcom::write_instances(instances, split_files[si]);

    size_t negatives = 0, keywords = 0;
    for (const auto& inst : instances) {
      negatives += inst.is_negative_nsp ? 1 : 0;
      keywords += inst.plan.flat.size();
    }
    std::cout << "split=" << split_names[si] << " paragraphs=" << splits[si].size()
              << " instances=" << instances.size() << " negatives=" << negatives
              << " keywords=" << keywords << "\n";
  }
  delete attention_model;
  return kExitOk;
}

int cmd_extract(const RunConfig& cfg, const std::string& input, const std::string& out_path) {
  const std::string extractor = cfg.get_string("extractor", "offtheshelf");
  std::ostringstream out;
  if (extractor == "attention") {
    const std::string instances_path = cfg.require_string("instances");
    const ssp::planner::Model model =
        ssp::trainer::load_checkpoint(cfg.require_string("attention_checkpoint"));
    int index = 0;
    for (const auto& inst : ssp::parcom::read_instances(instances_path)) {
      for (const auto& scored : model.attention_received_per_sentence(inst)) {
        std::vector<std::string> keywords;
        for (const auto& sw : scored) {
          if (static_cast<int>(keywords.size()) >= cfg.get_int("extract_nkps", 5)) break;
          keywords.push_back(sw.token);
        }
        nlohmann::json j{{"sentence_index", index++}, {"extractor", extractor},
                         {"keywords", keywords}};
        out << j.dump() << "\n";
      }
    }
  } else {
    ssp::planner::Model* unused = nullptr;
    PlanBuilder pb = make_plan_builder(cfg, &unused);
    const int min_len = cfg.get_int("min_sentences", 4);
    const int max_len = cfg.get_int("max_sentences", 7);
    const bool single_para = cfg.get_bool("single_paragraph_mode", false);
    const auto paragraphs = ssp::corpus::segment_paragraphs(read_file(input), min_len, max_len,
                                                            single_para,
                                                            fs::path(input).stem().string());
    int index = 0;
    for (const auto& para : paragraphs) {
      for (const auto& sentence : para.sentences) {
        ssp::Rng rng(ssp::derive_seed(cfg.seed(), "extract." + std::to_string(index)));
        const auto keywords = extract_for_sentence(extractor, sentence, pb.extract_nkps,
                                                   pb.stopwords, pb.lexicon, &rng);
        nlohmann::json j{{"sentence_index", index++}, {"extractor", extractor},
                         {"keywords", keywords}};
        out << j.dump() << "\n";
      }
    }
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    write_file(out_path, out.str());
  }
  return kExitOk;
}

int cmd_train(const RunConfig& cfg) {
  const DatasetPaths paths = dataset_paths(cfg);
  const ssp::corpus::Vocabulary vocab = ssp::corpus::Vocabulary::from_json(read_file(paths.vocab));
  const auto train_set = ssp::parcom::read_instances(paths.train);
  const auto valid_set = ssp::parcom::read_instances(paths.valid);
  const ssp::trainer::TrainConfig tc = cfg.train_config();

  ssp::trainer::TrainResult result =
      ssp::trainer::train(tc, vocab, train_set, valid_set, &std::cerr);
  ssp::trainer::save_checkpoint(result.model, checkpoint_path(cfg));
  write_file(cfg.out_dir() + "/train_report.json", result.report.to_json() + "\n");
  if (result.report.aborted) {
    std::cerr << "training aborted: " << result.report.abort_reason << "\n";
    return kExitNumeric;
  }
  std::cout << "checkpoint=" << checkpoint_path(cfg)
            << " best_epoch=" << result.report.best_epoch
            << " valid_total=" << result.report.final_valid.total << "\n";
  return kExitOk;
}

std::vector<std::string> apply_keyword_ratio(std::vector<std::string> keywords, double ratio,
                                             uint64_t seed) {
  if (ratio >= 1.0 || keywords.empty()) return keywords;
  const size_t keep = static_cast<size_t>(std::ceil(ratio * keywords.size()));
  if (keep >= keywords.size()) return keywords;
  std::vector<size_t> order(keywords.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  ssp::Rng rng(seed);
  rng.shuffle(order);
  order.resize(keep);
  std::sort(order.begin(), order.end());  // stable subset, original order
  std::vector<std::string> out;
  out.reserve(keep);
  for (size_t i : order) out.push_back(keywords[i]);
  return out;
}

int cmd_generate(const RunConfig& cfg, const std::string& ckpt_path,
                 const std::string& instances_path, const std::string& out_path) {
  const ssp::planner::Model model = ssp::trainer::load_checkpoint(ckpt_path);

  // Guard against mixing artifacts from different runs.
  const std::string vocab_path =
      cfg.get_string("vocab", fs::exists(dataset_paths(cfg).vocab) ? dataset_paths(cfg).vocab : "");
  if (!vocab_path.empty()) {
    const auto file_vocab = ssp::corpus::Vocabulary::from_json(read_file(vocab_path));
    if (!(file_vocab == model.vocab())) {
      throw ssp::FormatError("vocabulary mismatch between " + vocab_path + " and checkpoint " +
                             ckpt_path);
    }
  }

  const std::string source = cfg.get_string("keyword_source", "predicted");
  const double ratio = cfg.get_double("keyword_ratio", 1.0);
  if (ratio < 0.0 || ratio > 1.0) throw ssp::InputError("keyword_ratio must lie in [0,1]");
  const std::string mode_name = cfg.get_string("decode_mode", "greedy");
  const int max_len = cfg.get_int("max_decode_len", 24);
  const double top_p = cfg.get_double("top_p", 0.9);
  const uint64_t seed = cfg.seed();
  const int train_nkps = model.config().train_nkps;

  std::vector<ssp::evalkit::Completion> completions;
  for (const auto& inst : ssp::parcom::read_instances(instances_path)) {
    const std::string id = ssp::parcom::instance_id(inst);
    const ssp::planner::EncodedInstance enc =
        ssp::planner::encode_instance(inst, model.vocab(), model.config());
    const int p = std::min(train_nkps * static_cast<int>(inst.target.size()),
                           model.vocab().size() - ssp::corpus::kNumSpecials);

    std::vector<std::string> keywords;
    if (source == "predicted") {
      for (const auto& [kid, prob] : model.predict_plan(enc, p).top_keywords) {
        keywords.push_back(model.vocab().token_of(kid));
      }
    } else if (source == "ground_truth") {
      keywords = ssp::planner::training_keywords(inst, train_nkps);
    } else if (source == "random") {
      // Uniform over the non-special vocabulary, without replacement.
      ssp::Rng rng(ssp::derive_seed(seed, "randkw." + id));
      std::vector<int> ids(model.vocab().size() - ssp::corpus::kNumSpecials);
      for (size_t i = 0; i < ids.size(); ++i) ids[i] = ssp::corpus::kNumSpecials + static_cast<int>(i);
      rng.shuffle(ids);
      for (int i = 0; i < p && i < static_cast<int>(ids.size()); ++i) {
        keywords.push_back(model.vocab().token_of(ids[i]));
      }
    } else {
      throw ssp::InputError("unknown keyword_source: " + source);
    }
    keywords = apply_keyword_ratio(std::move(keywords), ratio,
                                   ssp::derive_seed(seed, "ratio." + id));

    ssp::planner::DecodeOptions opts;
    opts.mode = mode_name == "nucleus" ? ssp::planner::DecodeOptions::Mode::kNucleus
                                       : ssp::planner::DecodeOptions::Mode::kGreedy;
    opts.top_p = top_p;
    opts.max_len = max_len;
    opts.seed = ssp::derive_seed(seed, "decode." + id);
    opts.provided_keywords = keywords;
    const ssp::planner::DecodeResult dec = model.decode_targets(inst, opts);
    completions.push_back({id, dec.keywords_used, dec.sentences});
  }
  ssp::evalkit::write_completions(completions, out_path);
  std::cout << "completions=" << out_path << " instances=" << completions.size() << "\n";
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& ckpt_path,
                 const std::string& completions_path, const std::string& references_path,
                 const std::string& out_path) {
  const ssp::planner::Model model = ssp::trainer::load_checkpoint(ckpt_path);
  const auto references = ssp::parcom::read_instances(references_path);
  const auto completions = ssp::evalkit::read_completions(completions_path);
  const ssp::evalkit::MetricReport report =
      ssp::evalkit::evaluate_completions(model, references, completions);
  std::cout << report.to_table();
  std::cout << report.to_json() << "\n";
  if (!out_path.empty()) write_file(out_path, report.to_json() + "\n");
  return kExitOk;
}

int cmd_ablate(RunConfig cfg, const std::string& module_name) {
  const ssp::trainer::AblateModule module = ssp::trainer::parse_ablate_module(module_name);
  const ssp::trainer::TrainConfig base = cfg.train_config();
  const ssp::trainer::TrainConfig ablated = ssp::trainer::ablate(base, module);

  // Mirror the ablated knobs back into the flat config so the dataset and
  // training stages both see them.
  std::vector<std::string> overrides;
  overrides.push_back("lambda_plan=" + std::to_string(ablated.lambda_plan));
  overrides.push_back("lambda_next=" + std::to_string(ablated.lambda_next));
  overrides.push_back(std::string("use_sentence_pos=") +
                      (ablated.model.use_sentence_pos ? "true" : "false"));
  overrides.push_back(std::string("sample_nsp_negatives=") +
                      (ablated.sample_nsp_negatives ? "true" : "false"));
  overrides.push_back("keyword_source=" + ablated.test_keyword_source);
  RunConfig effective = RunConfig::from_overrides(overrides);
  std::map<std::string, std::string> merged = cfg.entries();
  for (const auto& [k, v] : effective.entries()) merged[k] = v;
  std::vector<std::string> merged_list;
  for (const auto& [k, v] : merged) merged_list.push_back(k + "=" + v);
  RunConfig final_cfg = RunConfig::from_overrides(merged_list);

  if (module == ssp::trainer::AblateModule::kNextSentencePrediction) {
    // NSP ablation changes the dataset itself (no negatives), so rebuild.
    const int rc = cmd_build_dataset(final_cfg);
    if (rc != kExitOk) return rc;
  }
  return cmd_train(final_cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-supervised text planner for paragraph completion"};
  app.require_subcommand(1);

  std::string config_path, input_path, out_path, ckpt_path, instances_path, completions_path,
      references_path, module_name;
  std::vector<std::string> overrides;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "flat key=value config file");
    if (config_required) opt->required();
    sub->add_option("--set", overrides, "override config entries, e.g. --set epochs=50")
        ->take_all();
  };

  CLI::App* build = app.add_subcommand("build-dataset",
                                       "segment a corpus and emit train/valid/test JSONL");
  add_common(build, true);

  CLI::App* extract = app.add_subcommand("extract", "emit per-sentence keywords as JSONL");
  add_common(extract, false);
  extract->add_option("--input", input_path, "plain-text input file");
  extract->add_option("--out", out_path, "output path (default stdout)");

  CLI::App* train = app.add_subcommand("train", "train the planner on a built dataset");
  add_common(train, true);

  CLI::App* generate = app.add_subcommand("generate", "decode completions for instances");
  add_common(generate, true);
  generate->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
  generate->add_option("--instances", instances_path, "instance JSONL file")->required();
  generate->add_option("--out", out_path, "completions JSONL output")->required();

  CLI::App* evaluate = app.add_subcommand("evaluate", "score completions against references");
  add_common(evaluate, true);
  evaluate->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
  evaluate->add_option("--completions", completions_path, "completions JSONL")->required();
  evaluate->add_option("--references", references_path, "reference instance JSONL")->required();
  evaluate->add_option("--out", out_path, "also write the metric JSON here");

  CLI::App* ablate = app.add_subcommand("ablate", "train with one self-supervision module removed");
  add_common(ablate, true);
  ablate->add_option("--module", module_name, "SP, PP, or NSP")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig::from_overrides(overrides)
                                        : RunConfig::load(config_path, overrides);
    if (build->parsed()) return cmd_build_dataset(cfg);
    if (extract->parsed()) {
      if (cfg.get_string("extractor", "offtheshelf") != "attention" && input_path.empty()) {
        throw ssp::InputError("extract: --input is required for sentence-level extractors");
      }
      return cmd_extract(cfg, input_path, out_path);
    }
    if (train->parsed()) return cmd_train(cfg);
    if (generate->parsed()) return cmd_generate(cfg, ckpt_path, instances_path, out_path);
    if (evaluate->parsed()) {
      return cmd_evaluate(cfg, ckpt_path, completions_path, references_path, out_path);
    }
    if (ablate->parsed()) return cmd_ablate(cfg, module_name);
  } catch (const ssp::AlignmentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitAlignment;
  } catch (const ssp::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const ssp::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ssp::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
