#include "osse/hash_embedding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace osse {

HashEmbeddingTable HashEmbeddingTable::init(std::size_t table_size, std::size_t embed_dim,
                                            std::size_t vocab_size, Rng& rng) {
  if (table_size == 0 || embed_dim == 0)
    throw std::invalid_argument("HashEmbeddingTable: table_size and embed_dim must be positive");
  HashEmbeddingTable t;
  t.table = DenseMatrix(table_size, embed_dim);
  const double bound = std::sqrt(6.0 / static_cast<double>(1 + embed_dim));
  for (auto& v : t.table.data) v = rng.uniform(-bound, bound);
  // unbiased blend between the two hashed rows
  t.weights1.assign(vocab_size, 0.5);
  t.weights2.assign(vocab_size, 0.5);
  return t;
}

std::size_t HashEmbeddingTable::row1(std::uint32_t id) const {
  return static_cast<std::size_t>(hash_u64(seed1 ^ id) % table.rows);
}

std::size_t HashEmbeddingTable::row2(std::uint32_t id) const {
  return static_cast<std::size_t>(hash_u64(seed2 ^ id) % table.rows);
}

void HashEmbeddingTable::check_id(std::uint32_t id) const {
  if (id >= vocab_size()) throw std::out_of_range("embed_token: token id out of range");
}

Vec embed_token(const HashEmbeddingTable& table, std::uint32_t id) {
  table.check_id(id);
  const auto r1 = table.table.row(table.row1(id));
  const auto r2 = table.table.row(table.row2(id));
  const double w1 = table.weights1[id], w2 = table.weights2[id];
  Vec out(table.embed_dim());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = w1 * r1[d] + w2 * r2[d];
  return out;
}

Vec pool_tokens(const HashEmbeddingTable& table, const TokenizedText& tokens) {
  Vec out(table.embed_dim(), 0.0);
  for (std::uint32_t id : tokens.ids) {
    table.check_id(id);
    const auto r1 = table.table.row(table.row1(id));
    const auto r2 = table.table.row(table.row2(id));
    const double w1 = table.weights1[id], w2 = table.weights2[id];
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += w1 * r1[d] + w2 * r2[d];
  }
  return out;
}

HashEmbedGrads HashEmbedGrads::zeros_like(const HashEmbeddingTable& table) {
  HashEmbedGrads g;
  g.table_grad = DenseMatrix(table.table.rows, table.table.cols);
  g.weights1_grad.assign(table.vocab_size(), 0.0);
  g.weights2_grad.assign(table.vocab_size(), 0.0);
  return g;
}

void HashEmbedGrads::clear() {
  table_grad.fill(0.0);
  std::fill(weights1_grad.begin(), weights1_grad.end(), 0.0);
  std::fill(weights2_grad.begin(), weights2_grad.end(), 0.0);
}

void pool_tokens_backward(const TokenizedText& tokens, std::span<const double> upstream,
                          const HashEmbeddingTable& table, HashEmbedGrads& grads) {
  if (upstream.size() != table.embed_dim())
    throw std::invalid_argument("pool_tokens_backward: upstream dim mismatch");
  for (std::uint32_t id : tokens.ids) {
    table.check_id(id);
    const std::size_t i1 = table.row1(id), i2 = table.row2(id);
    const auto r1 = table.table.row(i1);
    const auto r2 = table.table.row(i2);
    auto g1 = grads.table_grad.row(i1);
    auto g2 = grads.table_grad.row(i2);
    const double w1 = table.weights1[id], w2 = table.weights2[id];
    double dw1 = 0.0, dw2 = 0.0;
    for (std::size_t d = 0; d < upstream.size(); ++d) {
      const double g = upstream[d];
      g1[d] += w1 * g;
      g2[d] += w2 * g;
      dw1 += g * r1[d];
      dw2 += g * r2[d];
    }
    grads.weights1_grad[id] += dw1;
    grads.weights2_grad[id] += dw2;
  }
}

SparseHashGrads hash_embed_backward(const TokenizedText& tokens, std::span<const double> upstream,
                                    const HashEmbeddingTable& table) {
  std::map<std::size_t, Vec> rows;
  std::map<std::uint32_t, double> w1, w2;
  for (std::uint32_t id : tokens.ids) {
    table.check_id(id);
    const std::size_t i1 = table.row1(id), i2 = table.row2(id);
    const auto r1 = table.table.row(i1);
    const auto r2 = table.table.row(i2);
    auto& acc1 = rows.try_emplace(i1, Vec(table.embed_dim(), 0.0)).first->second;
    auto& acc2 = rows.try_emplace(i2, Vec(table.embed_dim(), 0.0)).first->second;
    const double bw1 = table.weights1[id], bw2 = table.weights2[id];
    double dw1 = 0.0, dw2 = 0.0;
    for (std::size_t d = 0; d < upstream.size(); ++d) {
      const double g = upstream[d];
      acc1[d] += bw1 * g;
      acc2[d] += bw2 * g;
      dw1 += g * r1[d];
      dw2 += g * r2[d];
    }
    w1[id] += dw1;
    w2[id] += dw2;
  }
  SparseHashGrads out;
  out.rows.assign(rows.begin(), rows.end());
  out.weights1.assign(w1.begin(), w1.end());
  out.weights2.assign(w2.begin(), w2.end());
  return out;
}

}  // namespace osse
