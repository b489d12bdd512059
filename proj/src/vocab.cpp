#include "rvq/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rvq/types.hpp"

namespace rvq {

namespace {

const char* kReservedSurfaces[] = {"<pad>", "<bos>", "<eos>", "<unk>"};

std::vector<std::string> split_utf8(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char b = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if ((b & 0x80u) == 0x00u)
      len = 1;
    else if ((b & 0xE0u) == 0xC0u)
      len = 2;
    else if ((b & 0xF0u) == 0xE0u)
      len = 3;
    else if ((b & 0xF8u) == 0xF0u)
      len = 4;
    len = std::min(len, text.size() - i);
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

}  // namespace

bool is_reserved_surface(const std::string& token) {
  for (const char* r : kReservedSurfaces)
    if (token == r) return true;
  return false;
}

std::vector<std::string> tokenize(const std::string& text, bool char_level) {
  if (char_level) return split_utf8(text);
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

void Vocabulary::add(const std::string& token) {
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& lines, bool char_level,
                             int min_count, int max_size) {
  Vocabulary v;
  v.char_level_ = char_level;
  for (const char* r : kReservedSurfaces) v.add(r);

  std::unordered_map<std::string, long> counts;
  std::vector<std::string> order;  // first-appearance order for tie-breaks
  for (const auto& line : lines) {
    for (const auto& tok : tokenize(line, char_level)) {
      if (is_reserved_surface(tok)) continue;
      auto it = counts.find(tok);
      if (it == counts.end()) {
        counts.emplace(tok, 1);
        order.push_back(tok);
      } else {
        ++it->second;
      }
    }
  }
  std::vector<std::pair<long, std::size_t>> ranked;  // (-count, appearance index)
  ranked.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) ranked.emplace_back(-counts[order[i]], i);
  std::sort(ranked.begin(), ranked.end());
  for (const auto& [neg_count, idx] : ranked) {
    if (-neg_count < min_count) break;
    if (v.size() - kReserved >= max_size) break;
    v.add(order[idx]);
  }
  return v;
}

Vocabulary Vocabulary::load_file(const std::string& path, bool char_level) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  Vocabulary v;
  v.char_level_ = char_level;
  for (const char* r : kReservedSurfaces) v.add(r);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (v.index_.count(line))
      throw std::runtime_error("duplicate token in vocabulary file: " + line);
    v.add(line);
  }
  return v;
}

void Vocabulary::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
  for (int i = kReserved; i < size(); ++i) out << tokens_[static_cast<std::size_t>(i)] << '\n';
}

int Vocabulary::id(const std::string& token) const {
  if (is_reserved_surface(token)) return kUnk;
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

TokenSequence Vocabulary::encode_text(const std::string& text) const {
  TokenSequence seq;
  seq.text = text;
  for (const auto& tok : tokenize(text, char_level_)) seq.ids.push_back(id(tok));
  return seq;
}

std::string Vocabulary::decode_ids(const std::vector<int>& ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!char_level_ && i > 0) out += ' ';
    out += token(ids[i]);
  }
  return out;
}

std::uint64_t hash_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for hashing: " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  return h;
}

}  // namespace rvq
