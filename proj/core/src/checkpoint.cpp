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

#include "ssplanner/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "ssplanner/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace ssp::trainer {

namespace {

nlohmann::json config_to_json(const planner::ModelConfig& cfg) {
  return {{"vocab_size", cfg.vocab_size}, {"layers", cfg.layers},
          {"heads", cfg.heads},           {"d_model", cfg.d_model},
          {"d_pos", cfg.d_pos},           {"max_seq", cfg.max_seq},
          {"max_para", cfg.max_para},     {"train_nkps", cfg.train_nkps},
          {"t_max", cfg.t_max},           {"use_sentence_pos", cfg.use_sentence_pos}};
}

planner::ModelConfig config_from_json(const nlohmann::json& j) {
  planner::ModelConfig cfg;
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.layers = j.at("layers").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.d_model = j.at("d_model").get<int>();
  cfg.d_pos = j.at("d_pos").get<int>();
  cfg.max_seq = j.at("max_seq").get<int>();
  cfg.max_para = j.at("max_para").get<int>();
  cfg.train_nkps = j.at("train_nkps").get<int>();
  cfg.t_max = j.at("t_max").get<int>();
  cfg.use_sentence_pos = j.at("use_sentence_pos").get<bool>();
  return cfg;
}

template <typename T>
void append_raw(std::vector<char>& out, const T& value) {
  const char* p = reinterpret_cast<const char*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

}  // namespace

std::vector<char> serialize_checkpoint(const planner::Model& model) {
  nlohmann::json header;
  header["config"] = config_to_json(model.config());
  header["vocab"] = model.vocab().tokens();

  nlohmann::json index = nlohmann::json::array();
  uint64_t offset = 0;
  visit_params(model.params(), [&](const std::string& name, const Tensor& t) {
    index.push_back({{"name", name},
                     {"shape", nlohmann::json::array({t.rows, t.cols})},
                     {"offset", offset}});
    offset += t.count() * sizeof(float);
  });
  header["tensors"] = index;
  const std::string header_text = header.dump();

  std::vector<char> bytes;
  bytes.reserve(sizeof(kCheckpointMagic) + 12 + header_text.size() + offset);
  bytes.insert(bytes.end(), kCheckpointMagic, kCheckpointMagic + 4);
  append_raw(bytes, kCheckpointVersion);
  append_raw(bytes, static_cast<uint64_t>(header_text.size()));
  bytes.insert(bytes.end(), header_text.begin(), header_text.end());

  visit_params(model.params(), [&](const std::string&, const Tensor& t) {
    for (double v : t.data) {
      const float f = static_cast<float>(v);
      append_raw(bytes, f);
    }
  });
  return bytes;
}

planner::Model deserialize_checkpoint(const std::vector<char>& bytes) {
  size_t cursor = 0;
  auto need = [&](size_t n, const char* what) {
    if (cursor + n > bytes.size()) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what);
    }
  };
  need(4, "magic");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic bytes");
  }
  cursor = 4;
  need(sizeof(uint32_t), "version");
  uint32_t version;
  std::memcpy(&version, bytes.data() + cursor, sizeof(version));
  cursor += sizeof(version);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version));
  }
  need(sizeof(uint64_t), "header length");
  uint64_t header_len;
  std::memcpy(&header_len, bytes.data() + cursor, sizeof(header_len));
  cursor += sizeof(header_len);
  need(header_len, "header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + cursor, bytes.begin() + cursor + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad header JSON: ") + e.what());
  }
  cursor += header_len;

  planner::ModelConfig cfg;
  corpus::Vocabulary vocab;
  planner::Params params;
  try {
    cfg = config_from_json(header.at("config"));
    vocab = corpus::Vocabulary::from_token_list(header.at("vocab").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: incomplete header: ") + e.what());
  }
  if (vocab.size() != cfg.vocab_size) {
    throw FormatError("checkpoint: vocabulary size disagrees with config");
  }
  params = planner::Params::shaped(cfg);

  const size_t payload_start = cursor;
  size_t tensor_i = 0;
  const auto& index = header.at("tensors");
  visit_params(params, [&](const std::string& name, Tensor& t) {
    if (tensor_i >= index.size()) throw FormatError("checkpoint: tensor index too short");
    const auto& entry = index[tensor_i++];
    if (entry.at("name").get<std::string>() != name) {
      throw FormatError("checkpoint: tensor order mismatch at " + name);
    }
    const auto shape = entry.at("shape");
    if (shape.at(0).get<int>() != t.rows || shape.at(1).get<int>() != t.cols) {
      throw FormatError("checkpoint: shape mismatch for " + name);
    }
    const uint64_t off = entry.at("offset").get<uint64_t>();
    const size_t begin = payload_start + off;
    const size_t nbytes = t.count() * sizeof(float);
    if (begin + nbytes > bytes.size()) {
      throw FormatError("checkpoint truncated while reading tensor " + name);
    }
    for (size_t i = 0; i < t.count(); ++i) {
      float f;
      std::memcpy(&f, bytes.data() + begin + i * sizeof(float), sizeof(float));
      t.data[i] = static_cast<double>(f);
    }
  });
  if (tensor_i != index.size()) throw FormatError("checkpoint: extra tensors in index");

  return planner::Model(cfg, std::move(vocab), std::move(params));
}

void save_checkpoint(const planner::Model& model, const std::string& path) {
  const std::vector<char> bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open checkpoint for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("checkpoint write failed: " + path);
}

planner::Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace ssp::trainer
