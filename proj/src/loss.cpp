#include "osse/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace osse {

std::string_view dataset_kind_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::query_pin: return "query_pin";
    case DatasetKind::query_product: return "query_product";
    case DatasetKind::query_query: return "query_query";
  }
  throw std::invalid_argument("unknown dataset kind");
}

DatasetKind dataset_kind_from_name(std::string_view name) {
  if (name == "query_pin") return DatasetKind::query_pin;
  if (name == "query_product") return DatasetKind::query_product;
  if (name == "query_query") return DatasetKind::query_query;
  throw std::invalid_argument("unknown dataset kind: " + std::string(name));
}

EntityKind dataset_entity_kind(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::query_pin: return EntityKind::pin;
    case DatasetKind::query_product: return EntityKind::product;
    case DatasetKind::query_query: return EntityKind::query;
  }
  throw std::invalid_argument("unknown dataset kind");
}

std::string_view encoder_route_name(EncoderRoute route) {
  switch (route) {
    case EncoderRoute::unified: return "unified";
    case EncoderRoute::compat_pin: return "compat_pin";
    case EncoderRoute::compat_product: return "compat_product";
    case EncoderRoute::query_tower: return "query_tower";
  }
  throw std::invalid_argument("unknown encoder route");
}

EncoderRoute encoder_route_from_name(std::string_view name) {
  if (name == "unified") return EncoderRoute::unified;
  if (name == "compat_pin") return EncoderRoute::compat_pin;
  if (name == "compat_product") return EncoderRoute::compat_product;
  if (name == "query_tower") return EncoderRoute::query_tower;
  throw std::invalid_argument("unknown encoder route: " + std::string(name));
}

void TaskSpec::validate() const {
  if (mix_weight < 0.0) throw std::invalid_argument("TaskSpec: mix_weight must be >= 0");
  const bool ok = (encoder == EncoderRoute::unified &&
                   (dataset == DatasetKind::query_pin || dataset == DatasetKind::query_product)) ||
                  (encoder == EncoderRoute::compat_pin && dataset == DatasetKind::query_pin) ||
                  (encoder == EncoderRoute::compat_product && dataset == DatasetKind::query_product) ||
                  (encoder == EncoderRoute::query_tower && dataset == DatasetKind::query_query);
  if (!ok)
    throw std::invalid_argument("TaskSpec '" + task_id + "': encoder " +
                                std::string(encoder_route_name(encoder)) +
                                " not valid for dataset " +
                                std::string(dataset_kind_name(dataset)));
}

NegativeSamplerState::NegativeSamplerState(std::vector<std::string> catalog_ids)
    : catalog_(std::move(catalog_ids)) {
  if (catalog_.empty()) throw std::invalid_argument("NegativeSamplerState: empty catalog");
}

void NegativeSamplerState::observe(const std::string& entity_id) {
  ++counts_[entity_id];
  ++total_;
}

std::uint64_t NegativeSamplerState::count(const std::string& entity_id) const {
  auto it = counts_.find(entity_id);
  return it == counts_.end() ? 0 : it->second;
}

double NegativeSamplerState::log_q_uniform() const {
  return -std::log(static_cast<double>(catalog_.size()));
}

std::vector<std::size_t> NegativeSamplerState::sample(Rng& rng, std::size_t n) const {
  std::vector<std::size_t> out(n);
  for (auto& idx : out) idx = static_cast<std::size_t>(rng.uniform_int(catalog_.size()));
  return out;
}

double estimate_logQ(const NegativeSamplerState& state, const std::string& entity_id) {
  if (state.total() == 0) throw std::logic_error("estimate_logQ: empty sampler state");
  const std::uint64_t c = std::max<std::uint64_t>(state.count(entity_id), 1);
  return std::log(static_cast<double>(c) / static_cast<double>(state.total()));
}

namespace {

double dot_span(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace

PairwiseLoss loss_in_batch(const DenseMatrix& query_embs, const DenseMatrix& pos_embs,
                           std::span<const double> log_q, double temperature) {
  const std::size_t batch = query_embs.rows, dim = query_embs.cols;
  if (batch == 0) throw std::invalid_argument("loss_in_batch: empty batch");
  if (pos_embs.rows != batch || pos_embs.cols != dim || log_q.size() != batch)
    throw std::invalid_argument("loss_in_batch: shape mismatch");
  if (temperature <= 0.0) throw std::invalid_argument("loss_in_batch: temperature must be > 0");

  // corrected logits s[i][j] = q_i.p_j / T - logQ_j
  DenseMatrix logits(batch, batch);
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t j = 0; j < batch; ++j)
      logits.at(i, j) = dot_span(query_embs.row(i), pos_embs.row(j)) / temperature - log_q[j];

  PairwiseLoss result;
  result.query_grads = DenseMatrix(batch, dim);
  result.pos_grads = DenseMatrix(batch, dim);

  const double inv_batch = 1.0 / static_cast<double>(batch);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const auto row = logits.row(i);
    const double m = *std::max_element(row.begin(), row.end());
    double denom = 0.0;
    for (double s : row) denom += std::exp(s - m);
    loss += -(row[i] - m - std::log(denom));
    for (std::size_t j = 0; j < batch; ++j) {
      const double softmax = std::exp(row[j] - m) / denom;
      const double d = (softmax - (i == j ? 1.0 : 0.0)) * inv_batch / temperature;
      axpy(d, pos_embs.row(j), result.query_grads.row(i));
      axpy(d, query_embs.row(i), result.pos_grads.row(j));
    }
  }
  result.loss = loss * inv_batch;
  return result;
}

PairwiseLoss loss_random_negatives(const DenseMatrix& query_embs, const DenseMatrix& pos_embs,
                                   std::span<const std::string> pos_ids,
                                   const DenseMatrix& neg_embs,
                                   std::span<const std::string> neg_ids,
                                   std::span<const double> log_q_pos,
                                   std::span<const double> log_q_neg, double temperature) {
  const std::size_t batch = query_embs.rows, dim = query_embs.cols;
  const std::size_t n_neg = neg_embs.rows;
  if (batch == 0) throw std::invalid_argument("loss_random_negatives: empty batch");
  if (pos_embs.rows != batch || pos_embs.cols != dim || pos_ids.size() != batch ||
      log_q_pos.size() != batch || neg_ids.size() != n_neg || log_q_neg.size() != n_neg)
    throw std::invalid_argument("loss_random_negatives: shape mismatch");
  if (temperature <= 0.0)
    throw std::invalid_argument("loss_random_negatives: temperature must be > 0");

  PairwiseLoss result;
  result.query_grads = DenseMatrix(batch, dim);
  result.pos_grads = DenseMatrix(batch, dim);
  result.neg_grads = DenseMatrix(n_neg, dim);
  const double inv_batch = 1.0 / static_cast<double>(batch);

  double loss = 0.0;
  std::vector<double> neg_logits(n_neg);
  for (std::size_t i = 0; i < batch; ++i) {
    const double pos_logit =
        dot_span(query_embs.row(i), pos_embs.row(i)) / temperature - log_q_pos[i];
    double m = pos_logit;
    for (std::size_t j = 0; j < n_neg; ++j) {
      if (neg_ids[j] == pos_ids[i]) {
        neg_logits[j] = -std::numeric_limits<double>::infinity();
        continue;
      }
      neg_logits[j] = dot_span(query_embs.row(i), neg_embs.row(j)) / temperature - log_q_neg[j];
      m = std::max(m, neg_logits[j]);
    }
    double denom = std::exp(pos_logit - m);
    for (std::size_t j = 0; j < n_neg; ++j)
      if (std::isfinite(neg_logits[j])) denom += std::exp(neg_logits[j] - m);
    loss += -(pos_logit - m - std::log(denom));

    const double alpha_pos = std::exp(pos_logit - m) / denom;
    const double d_pos = (alpha_pos - 1.0) * inv_batch / temperature;
    axpy(d_pos, pos_embs.row(i), result.query_grads.row(i));
    axpy(d_pos, query_embs.row(i), result.pos_grads.row(i));
    for (std::size_t j = 0; j < n_neg; ++j) {
      if (!std::isfinite(neg_logits[j])) continue;
      const double alpha = std::exp(neg_logits[j] - m) / denom;
      const double d = alpha * inv_batch / temperature;
      axpy(d, neg_embs.row(j), result.query_grads.row(i));
      axpy(d, query_embs.row(i), result.neg_grads.row(j));
    }
  }
  result.loss = loss * inv_batch;
  return result;
}

const TokenizedText* TokenCache::get(const std::string& key, std::string_view text,
                                     const VocabularyBundle& vocab) {
  auto it = cache_.find(key);
  if (it != cache_.end()) return &it->second;
  auto [ins, _] = cache_.emplace(key, tokenize(text, vocab));
  return &ins->second;
}

std::size_t TrainingBatch::pair_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.query_texts.size();
  return n;
}

namespace {

// Frozen compatibility embeddings for a doc list, as a matrix.
DenseMatrix compat_matrix(std::span<const EntityDocument* const> docs, std::size_t dim) {
  DenseMatrix m(docs.size(), dim);
  for (std::size_t r = 0; r < docs.size(); ++r) {
    const EmbeddingVector e = Model::encode_compat(*docs[r]);
    if (e.dim() != dim)
      throw std::invalid_argument("compat embedding dim mismatch for entity " + docs[r]->entity_id);
    std::copy(e.values.begin(), e.values.end(), m.row(r).begin());
  }
  return m;
}

std::vector<const TokenizedText*> entity_tokens(const Model& model,
                                                std::span<const EntityDocument* const> docs,
                                                TokenCache& cache) {
  std::vector<const TokenizedText*> tokens;
  tokens.reserve(docs.size());
  for (const auto* doc : docs)
    tokens.push_back(cache.get("e:" + doc->entity_id, model.assemble_entity_text(*doc),
                               model.vocab));
  return tokens;
}

std::vector<const TokenizedText*> query_tokens(const Model& model,
                                               std::span<const std::string> texts,
                                               TokenCache& cache) {
  std::vector<const TokenizedText*> tokens;
  tokens.reserve(texts.size());
  for (const auto& t : texts) tokens.push_back(cache.get("q:" + t, t, model.vocab));
  return tokens;
}

std::vector<std::string> ids_of(std::span<const EntityDocument* const> docs) {
  std::vector<std::string> ids;
  ids.reserve(docs.size());
  for (const auto* d : docs) ids.push_back(d->entity_id);
  return ids;
}

}  // namespace

LossBreakdown loss_total(const Model& model, const TrainingBatch& batch,
                         std::span<const TaskSpec> tasks,
                         const std::map<DatasetKind, NegativeSamplerState>& samplers,
                         const LossOptions& options, ModelGrads* grads, TokenCache& cache) {
  for (const auto& t : tasks) t.validate();
  LossBreakdown breakdown;
  bool any_task = false;

  for (const auto& group : batch.groups) {
    if (group.query_texts.empty()) continue;
    std::vector<const TaskSpec*> group_tasks;
    for (const auto& t : tasks)
      if (t.dataset == group.dataset) group_tasks.push_back(&t);
    if (group_tasks.empty()) continue;
    any_task = true;

    auto sampler_it = samplers.find(group.dataset);
    if (sampler_it == samplers.end())
      throw std::logic_error("loss_total: no sampler state for dataset " +
                             std::string(dataset_kind_name(group.dataset)));
    const NegativeSamplerState& sampler = sampler_it->second;

    const auto q_tokens = query_tokens(model, group.query_texts, cache);
    const TowerTape q_tape = query_tower_forward(model, q_tokens);
    DenseMatrix d_query(q_tape.embeddings.rows, q_tape.embeddings.cols);

    const std::vector<std::string> pos_ids = ids_of(group.entities);
    const std::vector<std::string> neg_ids = ids_of(group.negatives);
    std::vector<double> log_q_pos(pos_ids.size());
    for (std::size_t i = 0; i < pos_ids.size(); ++i)
      log_q_pos[i] = estimate_logQ(sampler, pos_ids[i]);
    const std::vector<double> log_q_neg(neg_ids.size(), sampler.log_q_uniform());

    for (const TaskSpec* task : group_tasks) {
      // positive/negative entity embeddings via the task's encoder
      DenseMatrix pos, neg;
      TowerTape pos_tape, neg_tape;
      const bool trainable_entities = task->encoder != EncoderRoute::compat_pin &&
                                      task->encoder != EncoderRoute::compat_product;
      if (task->encoder == EncoderRoute::unified) {
        pos_tape = entity_tower_forward(model, group.entities,
                                        entity_tokens(model, group.entities, cache));
        neg_tape = entity_tower_forward(model, group.negatives,
                                        entity_tokens(model, group.negatives, cache));
        pos = pos_tape.embeddings;
        neg = neg_tape.embeddings;
      } else if (task->encoder == EncoderRoute::query_tower) {
        std::vector<std::string> pos_texts, neg_texts;
        for (const auto* d : group.entities) pos_texts.push_back(d->title);
        for (const auto* d : group.negatives) neg_texts.push_back(d->title);
        pos_tape = query_tower_forward(model, query_tokens(model, pos_texts, cache));
        neg_tape = query_tower_forward(model, query_tokens(model, neg_texts, cache));
        pos = pos_tape.embeddings;
        neg = neg_tape.embeddings;
      } else {
        pos = compat_matrix(group.entities, model.config.embedding_dim);
        neg = compat_matrix(group.negatives, model.config.embedding_dim);
      }

      const PairwiseLoss bn =
          loss_in_batch(q_tape.embeddings, pos, log_q_pos, options.temperature);
      const PairwiseLoss rn =
          loss_random_negatives(q_tape.embeddings, pos, pos_ids, neg, neg_ids, log_q_pos,
                                log_q_neg, options.temperature);

      const double task_loss = bn.loss + options.random_negative_weight * rn.loss;
      breakdown.per_task[task->task_id] += task_loss;
      breakdown.total += task->mix_weight * task_loss;

      if (!grads) continue;
      const double w = task->mix_weight;
      const double wr = w * options.random_negative_weight;
      for (std::size_t i = 0; i < d_query.data.size(); ++i)
        d_query.data[i] += w * bn.query_grads.data[i] + wr * rn.query_grads.data[i];

      if (trainable_entities) {
        DenseMatrix d_pos(pos.rows, pos.cols);
        for (std::size_t i = 0; i < d_pos.data.size(); ++i)
          d_pos.data[i] = w * bn.pos_grads.data[i] + wr * rn.pos_grads.data[i];
        DenseMatrix d_neg(neg.rows, neg.cols);
        for (std::size_t i = 0; i < d_neg.data.size(); ++i)
          d_neg.data[i] = wr * rn.neg_grads.data[i];
        if (task->encoder == EncoderRoute::unified) {
          entity_tower_backward(model, pos_tape, d_pos, *grads);
          if (neg.rows > 0) entity_tower_backward(model, neg_tape, d_neg, *grads);
        } else {
          query_tower_backward(model, pos_tape, d_pos, *grads);
          if (neg.rows > 0) query_tower_backward(model, neg_tape, d_neg, *grads);
        }
      }
    }

    if (grads) query_tower_backward(model, q_tape, d_query, *grads);
  }

  if (!any_task) throw std::invalid_argument("loss_total: no applicable task for batch");
  return breakdown;
}

}  // namespace osse
