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

#include "ssplanner/corpus.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"
#include "ssplanner/errors.hpp"

namespace ssp::corpus {

namespace {

bool is_word_byte(unsigned char c) {
  // Non-ASCII bytes count as word bytes so UTF-8 sequences stay intact.
  return std::isalnum(c) != 0 || c >= 0x80;
}

bool is_terminal_punct(char c) { return c == '.' || c == '!' || c == '?'; }

bool all_whitespace(std::string_view s) {
  for (unsigned char c : s) {
    if (std::isspace(c) == 0) return false;
  }
  return true;
}

}  // namespace

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> specials = {"<pad>", "<unk>", "<bos>", "<eos>", "<sep>"};
  return specials;
}

bool valid_utf8(std::string_view text) {
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    size_t extra;
    uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
      if (cp < 0x02) return false;  // overlong
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= n) return false;
    for (size_t k = 1; k <= extra; ++k) {
      unsigned char cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (extra == 2 && cp < 0x800) return false;
    if (extra == 3 && (cp < 0x10000 || cp > 0x10FFFF)) return false;
    if (cp >= 0xD800 && cp <= 0xDFFF) return false;
    i += extra + 1;
  }
  return true;
}

Sentence tokenize(const std::string& raw_sentence) {
  if (all_whitespace(raw_sentence)) {
    throw InputError("tokenize: sentence is empty or all whitespace");
  }
  Sentence out;
  out.raw = raw_sentence;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      out.tokens.push_back(current);
      current.clear();
    }
  };
  for (unsigned char c : raw_sentence) {
    if (std::isspace(c) != 0) {
      flush();
    } else if (is_word_byte(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
      out.tokens.push_back(std::string(1, static_cast<char>(c)));
    }
  }
  flush();
  return out;
}

namespace {

std::vector<std::string> split_sentences(const std::string& block) {
  std::vector<std::string> sentences;
  std::string current;
  const size_t n = block.size();
  for (size_t i = 0; i < n; ++i) {
    char c = block[i];
    current.push_back(c);
    if (is_terminal_punct(c)) {
      // Consume a run of terminal punctuation, then break on whitespace/EOL.
      size_t j = i + 1;
      while (j < n && is_terminal_punct(block[j])) {
        current.push_back(block[j]);
        ++j;
      }
      if (j >= n || std::isspace(static_cast<unsigned char>(block[j])) != 0) {
        if (!all_whitespace(current)) sentences.push_back(current);
        current.clear();
      }
      i = j - 1;
    }
  }
  if (!all_whitespace(current)) sentences.push_back(current);
  return sentences;
}

}  // namespace

std::vector<Paragraph> segment_paragraphs(const std::string& raw_text, int min_len, int max_len,
                                          bool single_paragraph_mode, const std::string& doc_id) {
  if (min_len < 2) throw InputError("segment_paragraphs: min_len must be >= 2");
  if (max_len < min_len) throw InputError("segment_paragraphs: max_len must be >= min_len");
  if (!valid_utf8(raw_text)) throw InputError("segment_paragraphs: input is not valid UTF-8");

  std::vector<std::string> blocks;
  if (single_paragraph_mode) {
    if (!all_whitespace(raw_text)) blocks.push_back(raw_text);
  } else {
    std::string current;
    size_t i = 0;
    const size_t n = raw_text.size();
    auto flush = [&] {
      if (!all_whitespace(current)) blocks.push_back(current);
      current.clear();
    };
    while (i < n) {
      size_t eol = raw_text.find('\n', i);
      if (eol == std::string::npos) eol = n;
      std::string_view line(raw_text.data() + i, eol - i);
      if (all_whitespace(line)) {
        flush();
      } else {
        current.append(line);
        current.push_back('\n');
      }
      i = eol + 1;
    }
    flush();
  }

  std::vector<Paragraph> kept;
  int block_index = 0;
  for (const std::string& block : blocks) {
    Paragraph para;
    para.doc_id = doc_id;
    para.para_index = block_index++;
    for (const std::string& raw : split_sentences(block)) {
      para.sentences.push_back(tokenize(raw));
    }
    const int len = static_cast<int>(para.sentences.size());
    if (len >= min_len && len <= max_len) kept.push_back(std::move(para));
  }
  return kept;
}

void Vocabulary::rebuild_index() {
  ids_.clear();
  ids_.reserve(tokens_.size());
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) ids_[tokens_[i]] = i;
}

Vocabulary Vocabulary::build(const std::vector<Paragraph>& paragraphs, int max_vocab) {
  if (paragraphs.empty()) throw InputError("build_vocab: paragraph list is empty");
  if (max_vocab <= kNumSpecials) throw InputError("build_vocab: max_vocab must exceed 5");

  std::unordered_map<std::string, int64_t> freq;
  for (const Paragraph& p : paragraphs) {
    for (const Sentence& s : p.sentences) {
      for (const std::string& t : s.tokens) ++freq[t];
    }
  }
  std::vector<std::pair<std::string, int64_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(ranked.size()) > max_vocab - kNumSpecials) {
    ranked.resize(max_vocab - kNumSpecials);
  }

  Vocabulary v;
  v.tokens_ = special_tokens();
  v.counts_.assign(kNumSpecials, 0);
  for (auto& [token, count] : ranked) {
    v.tokens_.push_back(token);
    v.counts_.push_back(count);
  }
  v.rebuild_index();
  return v;
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) {
    throw InputError("decode: id " + std::to_string(id) + " out of range for vocabulary of size " +
                     std::to_string(size()));
  }
  return tokens_[id];
}

int64_t Vocabulary::count_of(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? 0 : counts_[it->second];
}

std::vector<int> Vocabulary::encode(const Sentence& sentence) const {
  return encode_tokens(sentence.tokens);
}

std::vector<int> Vocabulary::encode_tokens(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(id_of(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(token_of(id));
  return out;
}

std::string Vocabulary::to_json() const {
  nlohmann::json j;
  j["specials"] = special_tokens();
  nlohmann::json toks = nlohmann::json::array();
  for (int i = kNumSpecials; i < size(); ++i) {
    toks.push_back(nlohmann::json::array({tokens_[i], counts_[i]}));
  }
  j["tokens"] = toks;
  return j.dump();
}

Vocabulary Vocabulary::from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("vocabulary: bad JSON: ") + e.what());
  }
  if (!j.contains("specials") || !j.contains("tokens")) {
    throw FormatError("vocabulary: missing specials/tokens fields");
  }
  if (j["specials"].get<std::vector<std::string>>() != special_tokens()) {
    throw FormatError("vocabulary: unexpected special token list");
  }
  Vocabulary v;
  v.tokens_ = special_tokens();
  v.counts_.assign(kNumSpecials, 0);
  for (const auto& entry : j["tokens"]) {
    v.tokens_.push_back(entry.at(0).get<std::string>());
    v.counts_.push_back(entry.at(1).get<int64_t>());
  }
  v.rebuild_index();
  return v;
}

Vocabulary Vocabulary::from_token_list(const std::vector<std::string>& tokens) {
  if (tokens.size() < kNumSpecials) throw FormatError("vocabulary: token list too short");
  for (int i = 0; i < kNumSpecials; ++i) {
    if (tokens[i] != special_tokens()[i]) throw FormatError("vocabulary: specials out of order");
  }
  Vocabulary v;
  v.tokens_ = tokens;
  v.counts_.assign(tokens.size(), 0);
  v.rebuild_index();
  return v;
}

}  // namespace ssp::corpus
