#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace osse {

enum class TokenKind : std::uint8_t { unigram = 0, bigram = 1, char_trigram = 2 };

std::string_view token_kind_name(TokenKind kind);

struct VocabCaps {
  std::size_t unigrams = 0;
  std::size_t bigrams = 0;
  std::size_t trigrams = 0;
};

// Three token maps sharing one contiguous id space: unigram ids first, then
// bigrams, then character trigrams. Immutable after build.
class VocabularyBundle {
 public:
  std::optional<std::uint32_t> lookup(TokenKind kind, std::string_view token) const;

  std::size_t size() const { return total_; }
  std::size_t size(TokenKind kind) const;

  void insert(TokenKind kind, std::string token);  // builder use; ids assigned in call order

  // "token<TAB>id<TAB>kind" lines sorted by id.
  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;
  static VocabularyBundle load(std::istream& in);
  static VocabularyBundle load_file(const std::string& path);

  std::uint64_t content_hash() const;

 private:
  const std::unordered_map<std::string, std::uint32_t>& map_for(TokenKind kind) const;
  std::unordered_map<std::string, std::uint32_t> unigrams_, bigrams_, trigrams_;
  std::uint32_t total_ = 0;
};

struct TokenizedText {
  std::vector<std::uint32_t> ids;  // with multiplicity, in emission order

  bool empty() const { return ids.empty(); }
  std::size_t size() const { return ids.size(); }
};

// Lowercases, splits on whitespace and strips leading/trailing punctuation
// per word. Exposed for the vocabulary builder and tests.
std::vector<std::string> normalize_words(std::string_view text);

// Character trigrams of one normalized word with '#' boundary padding:
// "red" -> {#re, red, ed#}, "a" -> {#a#}.
std::vector<std::string> char_trigrams(std::string_view word);

// Most frequent tokens per kind up to each cap, ties broken by lexicographic
// token order. corpus is a line stream; throws on an empty corpus.
VocabularyBundle build_vocab(std::istream& corpus, const VocabCaps& caps);

// Emits in-vocab unigrams, adjacent-word bigrams and per-word trigrams;
// out-of-vocabulary tokens are dropped. Empty text yields an empty id list.
TokenizedText tokenize(std::string_view text, const VocabularyBundle& vocab);

}  // namespace osse
