#include "osse/encoders.hpp"

#include <algorithm>
#include <stdexcept>

namespace osse {

bool FeatureField::applies_to(EntityKind kind) const {
  return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

std::size_t ModelConfig::feature_dim() const {
  std::size_t n = 0;
  for (const auto& f : features) n += f.dim;
  return n;
}

Model Model::init(ModelConfig config, VocabularyBundle vocab, std::uint64_t seed) {
  Model m;
  m.config = config;
  m.vocab = std::move(vocab);
  Rng root(seed);
  Rng table_rng = root.substream("table");
  m.table = HashEmbeddingTable::init(config.table_size, config.token_dim, m.vocab.size(),
                                     table_rng);
  if (!config.share_hash_table) {
    Rng qt_rng = root.substream("query_table");
    m.query_table = HashEmbeddingTable::init(config.table_size, config.token_dim, m.vocab.size(),
                                             qt_rng);
  }

  std::vector<std::size_t> qdims;
  qdims.push_back(config.token_dim);
  for (std::size_t h : config.query_hidden) qdims.push_back(h);
  qdims.push_back(config.embedding_dim);
  Rng q_rng = root.substream("query_mlp");
  m.query_mlp = Mlp::init(MlpSpec::standard(std::move(qdims)), q_rng);

  std::vector<std::size_t> edims;
  edims.push_back(config.entity_input_dim());
  for (std::size_t h : config.entity_hidden) edims.push_back(h);
  edims.push_back(config.embedding_dim);
  Rng e_rng = root.substream("entity_mlp");
  m.entity_mlp = Mlp::init(MlpSpec::standard(std::move(edims)), e_rng);
  return m;
}

std::string Model::assemble_entity_text(const EntityDocument& doc) const {
  std::string text;
  auto append = [&text](std::string_view part) {
    if (part.empty()) return;
    if (!text.empty()) text += ' ';
    text += part;
  };
  if (config.flags.native_text) {
    append(doc.title);
    append(doc.description);
  }
  if (config.flags.captions) append(doc.synthetic_caption);
  if (config.flags.board_titles)
    for (const auto& b : doc.board_titles) append(b);
  if (config.flags.engaged_queries)
    for (const auto& eq : doc.engaged_queries) append(eq.query);
  return text;
}

Vec Model::entity_input(const EntityDocument& doc, const TokenizedText& tokens) const {
  Vec input(entity_input_dim_checked(), 0.0);
  const Vec pooled = pool_tokens(table, tokens);
  std::copy(pooled.begin(), pooled.end(), input.begin());
  std::size_t offset = config.token_dim;
  for (const auto& field : config.features) {
    if (config.flags.continuous) {
      auto it = doc.continuous_features.find(field.name);
      if (it != doc.continuous_features.end()) {
        if (it->second.size() != field.dim)
          throw std::invalid_argument("feature '" + field.name + "' has dim " +
                                      std::to_string(it->second.size()) + ", schema says " +
                                      std::to_string(field.dim));
        std::copy(it->second.begin(), it->second.end(), input.begin() + offset);
      }
      // absent features stay zero
    }
    offset += field.dim;
  }
  return input;
}

std::size_t Model::entity_input_dim_checked() const {
  const std::size_t dim = config.entity_input_dim();
  if (dim != entity_mlp.spec.input_dim())
    throw std::logic_error("entity MLP input dim does not match config");
  return dim;
}

EmbeddingVector Model::encode_query(std::string_view text) const {
  const TokenizedText tokens = tokenize(text, vocab);
  if (tokens.empty()) throw std::domain_error("unencodable query");
  const Vec pooled = pool_tokens(query_side_table(), tokens);
  const Vec out = mlp_forward(pooled, query_mlp);
  return l2_normalize(out);
}

EmbeddingVector Model::encode_entity(const EntityDocument& doc) const {
  if (doc.kind == EntityKind::query)
    throw std::invalid_argument("encode_entity: use the query tower for query documents");
  const TokenizedText tokens = tokenize(assemble_entity_text(doc), vocab);
  const Vec input = entity_input(doc, tokens);
  const Vec out = mlp_forward(input, entity_mlp);
  return l2_normalize(out);
}

EmbeddingVector Model::encode_compat(const EntityDocument& doc) {
  if (!doc.compat_embedding) throw std::invalid_argument("encode_compat: missing compat_embedding");
  return l2_normalize(*doc.compat_embedding);
}

std::vector<ParamView> Model::parameters() {
  std::vector<ParamView> params;
  auto add_table = [&params](std::string prefix, HashEmbeddingTable& t) {
    params.push_back({prefix + ".rows", std::span<double>(t.table.data)});
    params.push_back({prefix + ".w1", std::span<double>(t.weights1)});
    params.push_back({prefix + ".w2", std::span<double>(t.weights2)});
  };
  auto add_mlp = [&params](std::string prefix, Mlp& mlp) {
    for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
      params.push_back({prefix + ".w" + std::to_string(l), std::span<double>(mlp.weights[l].data)});
      params.push_back({prefix + ".b" + std::to_string(l), std::span<double>(mlp.biases[l])});
    }
  };
  add_table("table", table);
  if (query_table) add_table("query_table", *query_table);
  add_mlp("query_mlp", query_mlp);
  add_mlp("entity_mlp", entity_mlp);
  return params;
}

std::size_t Model::parameter_count() const {
  std::size_t n = table.table.data.size() + table.weights1.size() + table.weights2.size();
  if (query_table)
    n += query_table->table.data.size() + query_table->weights1.size() + query_table->weights2.size();
  return n + query_mlp.parameter_count() + entity_mlp.parameter_count();
}

ModelGrads ModelGrads::zeros_like(const Model& model) {
  ModelGrads g;
  g.table_grads = HashEmbedGrads::zeros_like(model.table);
  if (model.query_table) g.query_table_grads = HashEmbedGrads::zeros_like(*model.query_table);
  g.query_mlp_grads = MlpGrads::zeros_like(model.query_mlp);
  g.entity_mlp_grads = MlpGrads::zeros_like(model.entity_mlp);
  return g;
}

void ModelGrads::clear() {
  table_grads.clear();
  if (query_table_grads) query_table_grads->clear();
  query_mlp_grads.clear();
  entity_mlp_grads.clear();
}

std::vector<ParamView> ModelGrads::gradients() {
  std::vector<ParamView> views;
  auto add_table = [&views](std::string prefix, HashEmbedGrads& g) {
    views.push_back({prefix + ".rows", std::span<double>(g.table_grad.data)});
    views.push_back({prefix + ".w1", std::span<double>(g.weights1_grad)});
    views.push_back({prefix + ".w2", std::span<double>(g.weights2_grad)});
  };
  auto add_mlp = [&views](std::string prefix, MlpGrads& g) {
    for (std::size_t l = 0; l < g.weight_grads.size(); ++l) {
      views.push_back({prefix + ".w" + std::to_string(l), std::span<double>(g.weight_grads[l].data)});
      views.push_back({prefix + ".b" + std::to_string(l), std::span<double>(g.bias_grads[l])});
    }
  };
  add_table("table", table_grads);
  if (query_table_grads) add_table("query_table", *query_table_grads);
  add_mlp("query_mlp", query_mlp_grads);
  add_mlp("entity_mlp", entity_mlp_grads);
  return views;
}

namespace {

// Shared tail of both towers: batched MLP + row-wise normalization.
void finish_tower(const Mlp& mlp, const DenseMatrix& inputs, TowerTape& tape) {
  const DenseMatrix raw = mlp_forward(inputs, mlp, &tape.mlp_tape);
  tape.prenorm_lengths.resize(raw.rows);
  tape.embeddings = DenseMatrix(raw.rows, raw.cols);
  for (std::size_t r = 0; r < raw.rows; ++r) {
    const EmbeddingVector e = l2_normalize(raw.row(r));
    tape.prenorm_lengths[r] = l2_norm(raw.row(r));
    std::copy(e.values.begin(), e.values.end(), tape.embeddings.row(r).begin());
  }
}

// upstream d L/d embedding -> d L/d prenorm output, row by row.
DenseMatrix normalize_backward_rows(const TowerTape& tape, const DenseMatrix& upstream) {
  DenseMatrix out(upstream.rows, upstream.cols);
  for (std::size_t r = 0; r < upstream.rows; ++r) {
    EmbeddingVector e;
    e.values.assign(tape.embeddings.row(r).begin(), tape.embeddings.row(r).end());
    const Vec g = l2_normalize_backward(e, tape.prenorm_lengths[r], upstream.row(r));
    std::copy(g.begin(), g.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

TowerTape query_tower_forward(const Model& model,
                              std::span<const TokenizedText* const> tokens) {
  TowerTape tape;
  tape.tokens.assign(tokens.begin(), tokens.end());
  DenseMatrix inputs(tokens.size(), model.config.token_dim);
  const HashEmbeddingTable& t = model.query_side_table();
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    if (tokens[r]->empty()) throw std::domain_error("unencodable query");
    const Vec pooled = pool_tokens(t, *tokens[r]);
    std::copy(pooled.begin(), pooled.end(), inputs.row(r).begin());
  }
  finish_tower(model.query_mlp, inputs, tape);
  return tape;
}

TowerTape entity_tower_forward(const Model& model,
                               std::span<const EntityDocument* const> docs,
                               std::span<const TokenizedText* const> tokens) {
  if (docs.size() != tokens.size())
    throw std::invalid_argument("entity_tower_forward: docs/tokens size mismatch");
  TowerTape tape;
  tape.tokens.assign(tokens.begin(), tokens.end());
  DenseMatrix inputs(docs.size(), model.config.entity_input_dim());
  for (std::size_t r = 0; r < docs.size(); ++r) {
    const Vec input = model.entity_input(*docs[r], *tokens[r]);
    std::copy(input.begin(), input.end(), inputs.row(r).begin());
  }
  finish_tower(model.entity_mlp, inputs, tape);
  return tape;
}

void query_tower_backward(const Model& model, const TowerTape& tape, const DenseMatrix& upstream,
                          ModelGrads& grads) {
  const DenseMatrix d_raw = normalize_backward_rows(tape, upstream);
  const DenseMatrix d_input = mlp_backward(model.query_mlp, tape.mlp_tape, d_raw,
                                           grads.query_mlp_grads);
  HashEmbedGrads& tg =
      model.query_table ? *grads.query_table_grads : grads.table_grads;
  const HashEmbeddingTable& t = model.query_side_table();
  for (std::size_t r = 0; r < tape.tokens.size(); ++r)
    pool_tokens_backward(*tape.tokens[r], d_input.row(r), t, tg);
}

void entity_tower_backward(const Model& model, const TowerTape& tape, const DenseMatrix& upstream,
                           ModelGrads& grads) {
  const DenseMatrix d_raw = normalize_backward_rows(tape, upstream);
  const DenseMatrix d_input = mlp_backward(model.entity_mlp, tape.mlp_tape, d_raw,
                                           grads.entity_mlp_grads);
  // only the pooled-text slice carries gradient; feature slots are constants
  for (std::size_t r = 0; r < tape.tokens.size(); ++r) {
    std::span<const double> text_slice(d_input.row(r).data(), model.config.token_dim);
    pool_tokens_backward(*tape.tokens[r], text_slice, model.table, grads.table_grads);
  }
}

}  // namespace osse
