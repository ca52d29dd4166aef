#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osse/core_math.hpp"
#include "osse/documents.hpp"
#include "osse/hash_embedding.hpp"
#include "osse/tokenizer.hpp"

namespace osse {

// One named continuous feature slot of the unified encoder input. `kinds`
// lists the entity kinds that actually carry the feature; everyone else gets
// zeros in that slot so the input layout never changes.
struct FeatureField {
  std::string name;
  std::size_t dim = 0;
  std::vector<EntityKind> kinds;

  bool applies_to(EntityKind kind) const;
};

// Ablation switches for the unified encoder input.
struct EncoderFlags {
  bool native_text = true;
  bool captions = true;
  bool board_titles = true;
  bool engaged_queries = true;
  bool continuous = true;
};

struct ModelConfig {
  std::size_t embedding_dim = 64;  // output dim of every tower
  std::size_t token_dim = 64;      // hash table columns / pooled text width
  std::size_t table_size = 4096;
  std::vector<std::size_t> query_hidden = {64};
  std::vector<std::size_t> entity_hidden = {128, 128};
  std::vector<FeatureField> features;
  EncoderFlags flags;
  bool share_hash_table = true;

  std::size_t feature_dim() const;
  std::size_t entity_input_dim() const { return token_dim + feature_dim(); }
};

// The jointly trained towers: a query tower and a unified pin/product tower
// over a shared vocabulary and (by default) a shared hash embedding table.
// Compatibility encoding is a frozen pass-through and owns no parameters.
struct Model {
  ModelConfig config;
  VocabularyBundle vocab;
  HashEmbeddingTable table;
  std::optional<HashEmbeddingTable> query_table;  // present when the table is unshared
  Mlp query_mlp;
  Mlp entity_mlp;

  static Model init(ModelConfig config, VocabularyBundle vocab, std::uint64_t seed);

  const HashEmbeddingTable& query_side_table() const {
    return query_table ? *query_table : table;
  }

  // tokenize -> pool -> query MLP -> l2 normalize. Throws
  // std::domain_error("unencodable query") when no token survives.
  EmbeddingVector encode_query(std::string_view text) const;

  // assembled text + continuous features -> 3-layer MLP -> l2 normalize.
  EmbeddingVector encode_entity(const EntityDocument& doc) const;

  // Frozen pre-existing embedding, re-normalized. Never trained.
  static EmbeddingVector encode_compat(const EntityDocument& doc);

  // Flag-gated concatenation: title, description, caption, board titles,
  // engaged-query strings. Order fixed for reproducible token streams.
  std::string assemble_entity_text(const EntityDocument& doc) const;

  // [pooled text | feature slots], zero-filled where absent or disabled.
  Vec entity_input(const EntityDocument& doc, const TokenizedText& tokens) const;

  // Trainable tensors in fixed registration order.
  std::vector<ParamView> parameters();
  std::size_t parameter_count() const;

  std::size_t entity_input_dim_checked() const;
};

struct ModelGrads {
  HashEmbedGrads table_grads;
  std::optional<HashEmbedGrads> query_table_grads;
  MlpGrads query_mlp_grads;
  MlpGrads entity_mlp_grads;

  static ModelGrads zeros_like(const Model& model);
  void clear();
  // Aligned one-to-one with Model::parameters().
  std::vector<ParamView> gradients();
};

// Activation record of a batched tower forward pass.
struct TowerTape {
  std::vector<const TokenizedText*> tokens;  // per row
  MlpTape mlp_tape;
  Vec prenorm_lengths;
  DenseMatrix embeddings;  // batch x embedding_dim, unit rows
};

TowerTape query_tower_forward(const Model& model,
                              std::span<const TokenizedText* const> tokens);
TowerTape entity_tower_forward(const Model& model,
                               std::span<const EntityDocument* const> docs,
                               std::span<const TokenizedText* const> tokens);

void query_tower_backward(const Model& model, const TowerTape& tape, const DenseMatrix& upstream,
                          ModelGrads& grads);
void entity_tower_backward(const Model& model, const TowerTape& tape, const DenseMatrix& upstream,
                           ModelGrads& grads);

}  // namespace osse
