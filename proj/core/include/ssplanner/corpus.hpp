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

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ssp::corpus {

struct Sentence {
  std::vector<std::string> tokens;  // lowercase, none contains whitespace
  std::string raw;
};

struct Paragraph {
  std::vector<Sentence> sentences;
  std::string doc_id;
  int para_index = 0;
};

enum SpecialId : int { kPad = 0, kUnk = 1, kBos = 2, kEos = 3, kSep = 4 };
inline constexpr int kNumSpecials = 5;

// Surface forms of the reserved ids, in id order.
const std::vector<std::string>& special_tokens();

bool valid_utf8(std::string_view text);

// Lowercases, splits punctuation into standalone tokens, and splits on
// whitespace. Throws InputError when the input is all whitespace.
Sentence tokenize(const std::string& raw_sentence);

// Splits raw_text into paragraphs on blank lines (or treats the whole
// document as one paragraph), splits sentences on terminal punctuation
// followed by whitespace, and drops paragraphs outside [min_len, max_len].
std::vector<Paragraph> segment_paragraphs(const std::string& raw_text, int min_len, int max_len,
                                          bool single_paragraph_mode,
                                          const std::string& doc_id = "");

class Vocabulary {
 public:
  Vocabulary() = default;

  // Tokens ranked by frequency, ties broken lexicographically; the top
  // (max_vocab - 5) survive after the specials.
  static Vocabulary build(const std::vector<Paragraph>& paragraphs, int max_vocab);

  int size() const { return static_cast<int>(tokens_.size()); }
  bool contains(const std::string& token) const { return ids_.count(token) > 0; }
  int id_of(const std::string& token) const;         // kUnk when absent
  const std::string& token_of(int id) const;         // throws on bad id
  int64_t count_of(const std::string& token) const;  // 0 when absent

  std::vector<int> encode(const Sentence& sentence) const;
  std::vector<int> encode_tokens(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  // {"specials":[...], "tokens":[[token,count],...]} in rank order.
  std::string to_json() const;
  static Vocabulary from_json(const std::string& json_text);

  // Token list in id order, including specials. Order defines model ids.
  const std::vector<std::string>& tokens() const { return tokens_; }
  static Vocabulary from_token_list(const std::vector<std::string>& tokens);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<int64_t> counts_;
  std::unordered_map<std::string, int> ids_;

  void rebuild_index();
};

}  // namespace ssp::corpus
