#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace rvq {

// Integer-coded sentence; the unit of all model I/O.
struct TokenSequence {
  std::vector<int> ids;
  std::string text;
};

// Whitespace word-level tokens, or single UTF-8 code points when char_level.
std::vector<std::string> tokenize(const std::string& text, bool char_level);

// Token table with reserved ids 0..3. Corpus tokens spelled like a reserved
// marker are treated as out-of-vocabulary so the tokenizer never emits
// PAD/BOS/EOS from text.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReserved = 4;

  // Builds from corpus lines: tokens with count >= min_count, most frequent
  // first (ties by first appearance), capped at max_size non-reserved tokens.
  static Vocabulary build(const std::vector<std::string>& lines, bool char_level,
                          int min_count = 1, int max_size = 50000);

  // One token per line; line number = id - 4.
  static Vocabulary load_file(const std::string& path, bool char_level);
  void save_file(const std::string& path) const;

  int id(const std::string& token) const;  // UNK fallback
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  bool char_level() const { return char_level_; }

  TokenSequence encode_text(const std::string& text) const;
  std::string decode_ids(const std::vector<int>& ids) const;

 private:
  std::vector<std::string> tokens_;  // includes the 4 reserved entries
  std::unordered_map<std::string, int> index_;
  bool char_level_ = false;

  void add(const std::string& token);
};

bool is_reserved_surface(const std::string& token);

std::uint64_t hash_file_bytes(const std::string& path);

}  // namespace rvq
