#include "osse/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "osse/rng.hpp"

namespace osse {

std::string_view token_kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::unigram: return "unigram";
    case TokenKind::bigram: return "bigram";
    case TokenKind::char_trigram: return "trigram";
  }
  throw std::invalid_argument("unknown token kind");
}

namespace {

TokenKind token_kind_from_name(std::string_view name) {
  if (name == "unigram") return TokenKind::unigram;
  if (name == "bigram") return TokenKind::bigram;
  if (name == "trigram") return TokenKind::char_trigram;
  throw std::invalid_argument("unknown token kind: " + std::string(name));
}

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_strip_punct(unsigned char c) { return std::ispunct(c) && c != '#'; }

// Byte length of the UTF-8 sequence starting at a lead byte.
std::size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;  // invalid byte, treat as one unit
}

std::vector<std::string_view> utf8_units(std::string_view word) {
  std::vector<std::string_view> units;
  std::size_t i = 0;
  while (i < word.size()) {
    std::size_t len = std::min(utf8_len(static_cast<unsigned char>(word[i])), word.size() - i);
    units.push_back(word.substr(i, len));
    i += len;
  }
  return units;
}

}  // namespace

std::vector<std::string> normalize_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) continue;
    std::string_view raw = text.substr(start, i - start);
    std::size_t lo = 0, hi = raw.size();
    while (lo < hi && is_strip_punct(static_cast<unsigned char>(raw[lo]))) ++lo;
    while (hi > lo && is_strip_punct(static_cast<unsigned char>(raw[hi - 1]))) --hi;
    if (lo == hi) continue;
    std::string word(raw.substr(lo, hi - lo));
    for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    words.push_back(std::move(word));
  }
  return words;
}

std::vector<std::string> char_trigrams(std::string_view word) {
  std::vector<std::string_view> units = utf8_units(word);
  std::vector<std::string> padded;
  padded.reserve(units.size() + 2);
  padded.emplace_back("#");
  for (auto u : units) padded.emplace_back(u);
  padded.emplace_back("#");
  std::vector<std::string> out;
  if (padded.size() < 3) return out;
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i)
    out.push_back(padded[i] + padded[i + 1] + padded[i + 2]);
  return out;
}

std::optional<std::uint32_t> VocabularyBundle::lookup(TokenKind kind,
                                                      std::string_view token) const {
  const auto& m = map_for(kind);
  auto it = m.find(std::string(token));
  if (it == m.end()) return std::nullopt;
  return it->second;
}

std::size_t VocabularyBundle::size(TokenKind kind) const { return map_for(kind).size(); }

const std::unordered_map<std::string, std::uint32_t>& VocabularyBundle::map_for(
    TokenKind kind) const {
  switch (kind) {
    case TokenKind::unigram: return unigrams_;
    case TokenKind::bigram: return bigrams_;
    case TokenKind::char_trigram: return trigrams_;
  }
  throw std::invalid_argument("unknown token kind");
}

void VocabularyBundle::insert(TokenKind kind, std::string token) {
  auto& m = const_cast<std::unordered_map<std::string, std::uint32_t>&>(map_for(kind));
  auto [it, fresh] = m.emplace(std::move(token), total_);
  if (!fresh) throw std::invalid_argument("duplicate vocabulary token: " + it->first);
  ++total_;
}

void VocabularyBundle::save(std::ostream& out) const {
  std::map<std::uint32_t, std::pair<std::string, TokenKind>> by_id;
  for (const auto& [tok, id] : unigrams_) by_id[id] = {tok, TokenKind::unigram};
  for (const auto& [tok, id] : bigrams_) by_id[id] = {tok, TokenKind::bigram};
  for (const auto& [tok, id] : trigrams_) by_id[id] = {tok, TokenKind::char_trigram};
  for (const auto& [id, entry] : by_id)
    out << entry.first << '\t' << id << '\t' << token_kind_name(entry.second) << '\n';
}

void VocabularyBundle::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
  save(out);
}

VocabularyBundle VocabularyBundle::load(std::istream& in) {
  VocabularyBundle bundle;
  std::string line;
  std::uint32_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = line.rfind('\t');
    if (t1 == std::string::npos || t2 == t1)
      throw std::runtime_error("malformed vocabulary line: " + line);
    std::string token = line.substr(0, t1);
    const std::uint32_t id = static_cast<std::uint32_t>(std::stoul(line.substr(t1 + 1, t2 - t1 - 1)));
    const TokenKind kind = token_kind_from_name(line.substr(t2 + 1));
    if (id != expected) throw std::runtime_error("vocabulary ids must be dense and sorted");
    bundle.insert(kind, std::move(token));
    ++expected;
  }
  return bundle;
}

VocabularyBundle VocabularyBundle::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read vocabulary file: " + path);
  return load(in);
}

std::uint64_t VocabularyBundle::content_hash() const {
  std::ostringstream os;
  save(os);
  return fnv1a(os.str());
}

VocabularyBundle build_vocab(std::istream& corpus, const VocabCaps& caps) {
  std::map<std::string, std::uint64_t> uni_counts, bi_counts, tri_counts;
  std::string line;
  bool saw_any = false;
  while (std::getline(corpus, line)) {
    const std::vector<std::string> words = normalize_words(line);
    if (!words.empty()) saw_any = true;
    for (std::size_t i = 0; i < words.size(); ++i) {
      ++uni_counts[words[i]];
      if (i + 1 < words.size()) ++bi_counts[words[i] + " " + words[i + 1]];
      for (auto& tri : char_trigrams(words[i])) ++tri_counts[tri];
    }
  }
  if (!saw_any) throw std::invalid_argument("build_vocab: empty corpus");

  auto select = [](const std::map<std::string, std::uint64_t>& counts, std::size_t cap) {
    std::vector<std::pair<std::string, std::uint64_t>> entries(counts.begin(), counts.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (entries.size() > cap) entries.resize(cap);
    return entries;
  };

  VocabularyBundle bundle;
  for (auto& [tok, _] : select(uni_counts, caps.unigrams)) bundle.insert(TokenKind::unigram, tok);
  for (auto& [tok, _] : select(bi_counts, caps.bigrams)) bundle.insert(TokenKind::bigram, tok);
  for (auto& [tok, _] : select(tri_counts, caps.trigrams))
    bundle.insert(TokenKind::char_trigram, tok);
  return bundle;
}

TokenizedText tokenize(std::string_view text, const VocabularyBundle& vocab) {
  TokenizedText out;
  const std::vector<std::string> words = normalize_words(text);
  for (const auto& w : words)
    if (auto id = vocab.lookup(TokenKind::unigram, w)) out.ids.push_back(*id);
  for (std::size_t i = 0; i + 1 < words.size(); ++i)
    if (auto id = vocab.lookup(TokenKind::bigram, words[i] + " " + words[i + 1]))
      out.ids.push_back(*id);
  for (const auto& w : words)
    for (const auto& tri : char_trigrams(w))
      if (auto id = vocab.lookup(TokenKind::char_trigram, tri)) out.ids.push_back(*id);
  return out;
}

}  // namespace osse
