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

#include "ssplanner/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "json.hpp"
#include "ssplanner/errors.hpp"
#include "ssplanner/evalkit.hpp"
#include "ssplanner/rng.hpp"

namespace ssp::trainer {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw InputError("train: learning_rate must be > 0");
  if (weight_decay < 0.0) throw InputError("train: weight_decay must be >= 0");
  if (batch_size < 1) throw InputError("train: batch_size must be >= 1");
  if (epochs < 1) throw InputError("train: epochs must be >= 1");
  if (lambda_plan < 0.0 || lambda_next < 0.0) throw InputError("train: lambdas must be >= 0");
}

AblateModule parse_ablate_module(const std::string& name) {
  if (name == "SP") return AblateModule::kSentencePosition;
  if (name == "PP") return AblateModule::kPlanPrediction;
  if (name == "NSP") return AblateModule::kNextSentencePrediction;
  throw InputError("unknown ablation module: " + name + " (expected SP, PP, or NSP)");
}

TrainConfig ablate(TrainConfig config, AblateModule module) {
  switch (module) {
    case AblateModule::kSentencePosition:
      config.model.use_sentence_pos = false;
      break;
    case AblateModule::kPlanPrediction:
      config.lambda_plan = 0.0;
      config.test_keyword_source = "random";
      break;
    case AblateModule::kNextSentencePrediction:
      config.lambda_next = 0.0;
      config.sample_nsp_negatives = false;
      break;
  }
  return config;
}

AdamOptimizer::AdamOptimizer(double lr, double beta1, double beta2, double eps,
                             double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

void AdamOptimizer::step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads,
                         double clip_norm) {
  if (params.size() != grads.size()) throw InputError("optimizer: param/grad count mismatch");
  if (m_.empty()) {
    for (Tensor* p : params) {
      m_.emplace_back(p->rows, p->cols);
      v_.emplace_back(p->rows, p->cols);
    }
  }
  double norm_sq = 0.0;
  for (Tensor* g : grads) {
    for (double x : g->data) norm_sq += x * x;
  }
  const double norm = std::sqrt(norm_sq);
  const double scale = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (size_t j = 0; j < p.data.size(); ++j) {
      const double gj = g.data[j] * scale;
      m.data[j] = beta1_ * m.data[j] + (1.0 - beta1_) * gj;
      v.data[j] = beta2_ * v.data[j] + (1.0 - beta2_) * gj * gj;
      const double m_hat = m.data[j] / bc1;
      const double v_hat = v.data[j] / bc2;
      // Decoupled weight decay: applied to the parameter, not the gradient.
      p.data[j] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_) + lr_ * weight_decay_ * p.data[j];
    }
  }
}

namespace {

std::vector<Tensor*> tensor_pointers(planner::Params& p) {
  std::vector<Tensor*> out;
  planner::visit_params(p, [&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

struct StatsAccumulator {
  double plan_sum = 0.0, nsp_sum = 0.0, gen_sum = 0.0, total_sum = 0.0;
  int instances = 0, full_instances = 0, gen_steps = 0;

  void add(const planner::LossBreakdown& lb, double lambda_plan, double lambda_next) {
    nsp_sum += lb.nsp;
    total_sum += lb.full ? lambda_plan * lb.plan + lambda_next * lb.nsp + lb.gen
                         : lambda_next * lb.nsp;
    if (lb.full) {
      plan_sum += lb.plan;
      gen_sum += lb.gen;
      gen_steps += lb.gen_steps;
      ++full_instances;
    }
    ++instances;
  }

  EpochStats finish() const {
    EpochStats s;
    s.instances = instances;
    s.gen_steps = gen_steps;
    if (instances > 0) {
      s.nsp = nsp_sum / instances;
      s.total = total_sum / instances;
    }
    if (full_instances > 0) {
      s.plan = plan_sum / full_instances;
      s.gen = gen_sum / full_instances;
    }
    if (gen_steps > 0) s.gen_per_token = gen_sum / gen_steps;
    return s;
  }
};

}  // namespace

EpochStats validate(const planner::Model& model,
                    const std::vector<parcom::MaskedInstance>& instances, double lambda_plan,
                    double lambda_next) {
  if (instances.empty()) throw InputError("validate: empty instance set");
  StatsAccumulator acc;
  for (const parcom::MaskedInstance& inst : instances) {
    const planner::EncodedInstance enc =
        planner::encode_instance(inst, model.vocab(), model.config());
    acc.add(model.loss(enc, lambda_plan, lambda_next), lambda_plan, lambda_next);
  }
  return acc.finish();
}

ValidationRecord validate_full(const planner::Model& model,
                               const std::vector<parcom::MaskedInstance>& instances,
                               double lambda_plan, double lambda_next, uint64_t seed) {
  ValidationRecord rec;
  rec.losses = validate(model, instances, lambda_plan, lambda_next);
  rec.nsp_accuracy = evalkit::nsp_accuracy(model, instances);
  rec.pp_accuracy = evalkit::pp_accuracy(model, instances).accuracy;

  const auto embed = evalkit::model_embedding_lookup(model);
  double bleu_sum = 0.0, ve_sum = 0.0, usage_sum = 0.0;
  int usage_count = 0;
  int decoded = 0;
  for (const parcom::MaskedInstance& inst : instances) {
    if (inst.is_negative_nsp) continue;
    planner::DecodeOptions opts;
    opts.mode = planner::DecodeOptions::Mode::kGreedy;
    opts.seed = derive_seed(seed, "validate." + parcom::instance_id(inst));
    const planner::DecodeResult dec = model.decode_targets(inst, opts);
    std::vector<std::string> hyp, ref;
    for (const auto& s : dec.sentences) hyp.insert(hyp.end(), s.begin(), s.end());
    for (const auto& ps : inst.target) {
      ref.insert(ref.end(), ps.sentence.tokens.begin(), ps.sentence.tokens.end());
    }
    bleu_sum += evalkit::bleu(hyp, ref);
    ve_sum += evalkit::vector_extrema(hyp, ref, embed);
    if (!dec.keywords_used.empty()) {
      usage_sum += evalkit::keyword_usage_rate(dec.sentences, dec.keywords_used);
      ++usage_count;
    }
    ++decoded;
  }
  rec.decoded_instances = decoded;
  if (decoded > 0) {
    rec.bleu = bleu_sum / decoded;
    rec.vector_extrema = ve_sum / decoded;
  }
  if (usage_count > 0) rec.keyword_usage_rate = usage_sum / usage_count;
  return rec;
}

TrainResult train(const TrainConfig& config, const corpus::Vocabulary& vocab,
                  const std::vector<parcom::MaskedInstance>& train_set,
                  const std::vector<parcom::MaskedInstance>& valid_set, std::ostream* progress) {
  config.validate();
  if (train_set.empty()) throw InputError("train: empty training set");
  if (valid_set.empty()) throw InputError("train: empty validation set");

  const auto wall_start = std::chrono::steady_clock::now();
  planner::Model model(config.model, vocab, config.seed);

  std::vector<planner::EncodedInstance> encoded;
  encoded.reserve(train_set.size());
  for (const parcom::MaskedInstance& inst : train_set) {
    encoded.push_back(planner::encode_instance(inst, model.vocab(), model.config()));
  }

  planner::Params grads = planner::Params::shaped(model.config());
  const std::vector<Tensor*> param_ptrs = tensor_pointers(model.mutable_params());
  const std::vector<Tensor*> grad_ptrs = tensor_pointers(grads);
  AdamOptimizer opt(config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps,
                    config.weight_decay);

  TrainReport report;
  planner::Params best = model.params();
  planner::Params last_good = model.params();
  double best_valid = std::numeric_limits<double>::infinity();

  std::vector<size_t> order(encoded.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  bool aborted = false;
  for (int epoch = 0; epoch < config.epochs && !aborted; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, "epoch." + std::to_string(epoch)));
    shuffle_rng.shuffle(order);

    StatsAccumulator acc;
    for (size_t start = 0; start < order.size() && !aborted; start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      grads.zero_();
      double batch_total = 0.0;
      int count = 0;
      for (size_t i = start; i < end; ++i) {
        try {
          const planner::LossBreakdown lb = model.loss_and_gradients(
              encoded[order[i]], config.lambda_plan, config.lambda_next, grads);
          acc.add(lb, config.lambda_plan, config.lambda_next);
          batch_total += lb.full ? config.lambda_plan * lb.plan + config.lambda_next * lb.nsp +
                                       lb.gen
                                 : config.lambda_next * lb.nsp;
          ++count;
        } catch (const NumericError& e) {
          report.abort_reason = std::string("epoch ") + std::to_string(epoch) + ": " + e.what();
          aborted = true;
          break;
        }
      }
      if (aborted) break;
      for (Tensor* g : grad_ptrs) g->scale_(1.0 / count);
      opt.step(param_ptrs, grad_ptrs, config.grad_clip_norm);
      report.step_total_losses.push_back(batch_total / count);
      if (!model.params().all_finite()) {
        report.abort_reason = "non-finite parameters after epoch " + std::to_string(epoch);
        aborted = true;
      }
    }
    if (aborted) break;

    const EpochStats train_stats = acc.finish();
    report.train_history.push_back(train_stats);
    const EpochStats valid_stats =
        validate(model, valid_set, config.lambda_plan, config.lambda_next);
    report.valid_total_history.push_back(valid_stats.total);
    if (valid_stats.total < best_valid) {
      best_valid = valid_stats.total;
      best = model.params();
      report.best_epoch = epoch;
    }
    last_good = model.params();
    if (progress != nullptr) {
      (*progress) << "epoch=" << epoch << " plan=" << train_stats.plan
                  << " nsp=" << train_stats.nsp << " gen=" << train_stats.gen
                  << " total=" << train_stats.total << "\n";
    }
  }

  report.aborted = aborted;
  planner::Model result_model(model.config(), vocab, aborted ? std::move(last_good)
                                                             : std::move(best));
  report.final_train =
      validate(result_model, train_set, config.lambda_plan, config.lambda_next);
  report.final_valid =
      validate(result_model, valid_set, config.lambda_plan, config.lambda_next);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return {std::move(result_model), std::move(report)};
}

namespace {

nlohmann::json stats_to_json(const EpochStats& s) {
  return {{"plan", s.plan},
          {"nsp", s.nsp},
          {"gen", s.gen},
          {"gen_per_token", s.gen_per_token},
          {"total", s.total},
          {"instances", s.instances},
          {"gen_steps", s.gen_steps}};
}

}  // namespace

std::string TrainReport::to_json() const {
  nlohmann::json j;
  nlohmann::json hist = nlohmann::json::array();
  for (const EpochStats& s : train_history) hist.push_back(stats_to_json(s));
  j["train_history"] = hist;
  j["valid_total_history"] = valid_total_history;
  j["final_train"] = stats_to_json(final_train);
  j["final_valid"] = stats_to_json(final_valid);
  j["best_epoch"] = best_epoch;
  j["wall_seconds"] = wall_seconds;
  j["aborted"] = aborted;
  if (aborted) j["abort_reason"] = abort_reason;
  return j.dump(2);
}

}  // namespace ssp::trainer
