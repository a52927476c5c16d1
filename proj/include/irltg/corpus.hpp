#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "irltg/errors.hpp"
#include "irltg/policy_net.hpp"  // reserved token ids
#include "irltg/rng.hpp"

namespace irltg {

inline const char* kBosToken = "<s>";
inline const char* kEosToken = "</s>";

// Lowercases ASCII letters, splits on whitespace, and breaks punctuation out
// into standalone tokens.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

// Token table with ids 0 and 1 reserved for the sequence markers.
class Vocab {
 public:
  Vocab() {
    add(kBosToken);
    add(kEosToken);
  }

  int add(const std::string& token) {
    const auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    const int id = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(token);
    token_to_id_.emplace(token, id);
    return id;
  }

  bool contains(const std::string& token) const { return token_to_id_.count(token) > 0; }

  int id(const std::string& token) const {
    const auto it = token_to_id_.find(token);
    if (it == token_to_id_.end()) throw ArgumentError("Vocab: unknown token '" + token + "'");
    return it->second;
  }

  const std::string& token(int id) const {
    if (id < 0 || id >= static_cast<int>(id_to_token_.size()))
      throw ArgumentError("Vocab: id " + std::to_string(id) + " out of range");
    return id_to_token_[id];
  }

  int size() const { return static_cast<int>(id_to_token_.size()); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

struct FilterResult {
  Vocab vocab;
  std::vector<std::vector<std::string>> kept;
};

// Keeps sentences within [min_len, max_len], then repeatedly removes tokens
// whose frequency over the kept sentences falls below min_freq together with
// every sentence containing one, until stable. The fixed point makes the
// operation idempotent. The vocabulary covers the surviving tokens in first
// occurrence order.
inline FilterResult build_vocab_and_filter(const std::vector<std::vector<std::string>>& sentences,
                                           int min_freq, int min_len, int max_len) {
  if (min_freq < 1) throw ArgumentError("build_vocab_and_filter: min_freq must be >= 1");
  if (min_len < 1 || max_len < min_len)
    throw ArgumentError("build_vocab_and_filter: need 1 <= min_len <= max_len");

  std::vector<std::vector<std::string>> kept;
  for (const auto& s : sentences) {
    const int len = static_cast<int>(s.size());
    if (len >= min_len && len <= max_len) kept.push_back(s);
  }

  for (;;) {
    if (kept.empty()) throw ArgumentError("build_vocab_and_filter: no sentences survive");
    std::unordered_map<std::string, int> freq;
    for (const auto& s : kept)
      for (const auto& t : s) ++freq[t];
    std::unordered_set<std::string> removed;
    for (const auto& [t, c] : freq)
      if (c < min_freq) removed.insert(t);
    if (removed.empty()) break;
    std::vector<std::vector<std::string>> next;
    next.reserve(kept.size());
    for (auto& s : kept) {
      const bool drop = std::any_of(s.begin(), s.end(),
                                    [&](const std::string& t) { return removed.count(t) > 0; });
      if (!drop) next.push_back(std::move(s));
    }
    kept = std::move(next);
  }

  FilterResult res;
  for (const auto& s : kept)
    for (const auto& t : s) res.vocab.add(t);
  res.kept = std::move(kept);
  return res;
}

// Tokens to ids; unknown tokens are an error (no unknown-word id).
inline std::vector<int> encode(const Vocab& vocab, const std::vector<std::string>& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

// Ids to tokens; the reserved marker ids are dropped, invalid ids throw.
inline std::vector<std::string> decode(const Vocab& vocab, const std::vector<int>& ids) {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int id : ids) {
    const std::string& t = vocab.token(id);  // validates range
    if (id >= kReservedTokens) tokens.push_back(t);
  }
  return tokens;
}

// One sequence per line, space-separated non-negative decimal token ids.
inline std::vector<std::vector<int>> read_token_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::open_failed, "cannot open " + path);
  std::vector<std::vector<int>> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::vector<int> seq;
    size_t i = 0;
    const auto fail = [&](const std::string& why) {
      throw IoError(IoError::Kind::malformed,
                    path + " line " + std::to_string(lineno) + ": " + why);
    };
    while (i < line.size()) {
      if (!std::isdigit(static_cast<unsigned char>(line[i]))) fail("expected a digit");
      long long v = 0;
      while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
        v = v * 10 + (line[i] - '0');
        if (v > std::numeric_limits<int>::max()) fail("token id overflows");
        ++i;
      }
      seq.push_back(static_cast<int>(v));
      if (i < line.size()) {
        if (line[i] != ' ') fail("expected a single space between ids");
        ++i;
        if (i == line.size()) fail("trailing space");
      }
    }
    out.push_back(std::move(seq));
  }
  return out;
}

inline void write_token_file(const std::string& path, const std::vector<std::vector<int>>& seqs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(IoError::Kind::open_failed, "cannot open " + path + " for writing");
  for (const auto& seq : seqs) {
    for (size_t i = 0; i < seq.size(); ++i) {
      if (seq[i] < 0) throw ArgumentError("write_token_file: negative token id");
      if (i) out << ' ';
      out << seq[i];
    }
    out << '\n';
  }
  if (!out) throw IoError(IoError::Kind::open_failed, "write failed for " + path);
}

// One token per line; the first two lines must be the reserved markers.
inline void write_vocab_file(const std::string& path, const Vocab& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(IoError::Kind::open_failed, "cannot open " + path + " for writing");
  for (const auto& t : vocab.tokens()) out << t << '\n';
  if (!out) throw IoError(IoError::Kind::open_failed, "write failed for " + path);
}

inline Vocab read_vocab_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::open_failed, "cannot open " + path);
  Vocab vocab;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fail = [&](const std::string& why) {
      throw IoError(IoError::Kind::malformed,
                    path + " line " + std::to_string(lineno) + ": " + why);
    };
    if (line.empty()) fail("empty token");
    if (line.find(' ') != std::string::npos) fail("token contains a space");
    if (lineno == 1) {
      if (line != kBosToken) fail("first token must be " + std::string(kBosToken));
    } else if (lineno == 2) {
      if (line != kEosToken) fail("second token must be " + std::string(kEosToken));
    } else {
      if (vocab.contains(line)) fail("duplicate token '" + line + "'");
      vocab.add(line);
    }
  }
  if (lineno < 2) throw IoError(IoError::Kind::truncated, path + ": missing reserved tokens");
  return vocab;
}

// Seeded shuffle, then the first n_test sequences form the test split.
inline std::pair<std::vector<std::vector<int>>, std::vector<std::vector<int>>> split_train_test(
    const std::vector<std::vector<int>>& seqs, size_t n_test, RngStream rng) {
  if (n_test > seqs.size()) throw ArgumentError("split_train_test: n_test exceeds corpus size");
  const auto order = rng.sample_indices(seqs.size(), seqs.size());
  std::pair<std::vector<std::vector<int>>, std::vector<std::vector<int>>> out;
  out.second.reserve(n_test);
  out.first.reserve(seqs.size() - n_test);
  for (size_t i = 0; i < order.size(); ++i) {
    if (i < n_test)
      out.second.push_back(seqs[order[i]]);
    else
      out.first.push_back(seqs[order[i]]);
  }
  return out;
}

}  // namespace irltg
