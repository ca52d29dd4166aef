#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "osse/core_math.hpp"
#include "osse/tokenizer.hpp"

namespace osse {

// 2-hash hash embedding table: a token id i is hashed into two rows of a
// shared table and its embedding is W1[i] * row(h1(i)) + W2[i] * row(h2(i))
// with per-token learned blend weights.
struct HashEmbeddingTable {
  DenseMatrix table;  // table_size x embed_dim
  Vec weights1;       // |V|
  Vec weights2;       // |V|
  std::uint64_t seed1 = 0x9e3779b97f4a7c15ULL;
  std::uint64_t seed2 = 0xd1b54a32d192ed03ULL;

  static HashEmbeddingTable init(std::size_t table_size, std::size_t embed_dim,
                                 std::size_t vocab_size, Rng& rng);

  std::size_t vocab_size() const { return weights1.size(); }
  std::size_t embed_dim() const { return table.cols; }
  std::size_t row1(std::uint32_t id) const;
  std::size_t row2(std::uint32_t id) const;
  void check_id(std::uint32_t id) const;
};

// W1[i]*row(h1(i)) + W2[i]*row(h2(i)); throws std::out_of_range for ids
// beyond the vocabulary.
Vec embed_token(const HashEmbeddingTable& table, std::uint32_t id);

// Elementwise sum of embed_token over ids with multiplicity; empty ids give
// the zero vector.
Vec pool_tokens(const HashEmbeddingTable& table, const TokenizedText& tokens);

// Gradient buffers shaped like the table parameters; reused across steps.
struct HashEmbedGrads {
  DenseMatrix table_grad;
  Vec weights1_grad;
  Vec weights2_grad;

  static HashEmbedGrads zeros_like(const HashEmbeddingTable& table);
  void clear();
};

// Sparse view of one backward pass: touched rows and blend weights only.
struct SparseHashGrads {
  std::vector<std::pair<std::size_t, Vec>> rows;              // row index -> dL/drow, sorted
  std::vector<std::pair<std::uint32_t, double>> weights1;     // token id -> dL/dW1, sorted
  std::vector<std::pair<std::uint32_t, double>> weights2;
};

// Gradients of a pooled sum w.r.t. touched table rows and blend weights;
// contributions to a shared row accumulate additively.
SparseHashGrads hash_embed_backward(const TokenizedText& tokens, std::span<const double> upstream,
                                    const HashEmbeddingTable& table);

// Same math, accumulated into dense buffers (training path).
void pool_tokens_backward(const TokenizedText& tokens, std::span<const double> upstream,
                          const HashEmbeddingTable& table, HashEmbedGrads& grads);

}  // namespace osse
