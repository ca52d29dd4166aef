#pragma once

#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "osse/encoders.hpp"

namespace osse {

enum class DatasetKind : std::uint8_t { query_pin, query_product, query_query };

std::string_view dataset_kind_name(DatasetKind kind);
DatasetKind dataset_kind_from_name(std::string_view name);
EntityKind dataset_entity_kind(DatasetKind kind);

enum class EncoderRoute : std::uint8_t { unified, compat_pin, compat_product, query_tower };

std::string_view encoder_route_name(EncoderRoute route);
EncoderRoute encoder_route_from_name(std::string_view name);

// One training task: a pair dataset plus the encoder that embeds its
// entities. Pairs are shared across all tasks over the same dataset.
struct TaskSpec {
  std::string task_id;
  DatasetKind dataset = DatasetKind::query_pin;
  EncoderRoute encoder = EncoderRoute::unified;
  double mix_weight = 1.0;

  void validate() const;
};

// Catalog of one entity type plus streaming positive-occurrence counts used
// for the in-batch logQ estimate. Random negatives are drawn uniformly, so
// their correction is exactly -log |catalog|.
class NegativeSamplerState {
 public:
  NegativeSamplerState() = default;
  explicit NegativeSamplerState(std::vector<std::string> catalog_ids);

  void observe(const std::string& entity_id);

  double log_q_uniform() const;
  std::vector<std::size_t> sample(Rng& rng, std::size_t n) const;

  const std::vector<std::string>& catalog() const { return catalog_; }
  std::uint64_t total() const { return total_; }
  std::uint64_t count(const std::string& entity_id) const;

 private:
  std::vector<std::string> catalog_;
  std::unordered_map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// log(max(count(id), 1) / total): streaming frequency with an additive floor
// so unseen ids never produce -inf. Throws on an empty state.
double estimate_logQ(const NegativeSamplerState& state, const std::string& entity_id);

// Loss value plus gradients w.r.t. the embeddings that fed it.
struct PairwiseLoss {
  double loss = 0.0;
  DenseMatrix query_grads;  // batch x dim
  DenseMatrix pos_grads;    // batch x dim
  DenseMatrix neg_grads;    // negatives x dim (random-negative loss only)
};

// Softmax over the batch positives with per-candidate logQ correction:
// L = -1/|B| sum_i log( exp(q_i.p_i - logQ_i) / sum_j exp(q_i.p_j - logQ_j) ).
PairwiseLoss loss_in_batch(const DenseMatrix& query_embs, const DenseMatrix& pos_embs,
                           std::span<const double> log_q, double temperature = 1.0);

// Softmax over {own positive} u sampled catalog negatives; a negative equal
// to the pair's positive (by id) is skipped rather than double counted. Zero
// negatives degenerate to loss 0.
PairwiseLoss loss_random_negatives(const DenseMatrix& query_embs, const DenseMatrix& pos_embs,
                                   std::span<const std::string> pos_ids,
                                   const DenseMatrix& neg_embs,
                                   std::span<const std::string> neg_ids,
                                   std::span<const double> log_q_pos,
                                   std::span<const double> log_q_neg, double temperature = 1.0);

// Memoized tokenization; keys are stable strings (query text or entity id)
// so pointers into the cache survive rehashing.
class TokenCache {
 public:
  const TokenizedText* get(const std::string& key, std::string_view text,
                           const VocabularyBundle& vocab);
  std::size_t size() const { return cache_.size(); }

 private:
  std::unordered_map<std::string, TokenizedText> cache_;
};

// One composed training batch, grouped by dataset.
struct BatchGroup {
  DatasetKind dataset = DatasetKind::query_pin;
  std::vector<std::string> query_texts;            // per pair
  std::vector<const EntityDocument*> entities;     // per pair
  std::vector<const EntityDocument*> negatives;    // shared across the group's tasks
};

struct TrainingBatch {
  std::vector<BatchGroup> groups;

  std::size_t pair_count() const;
};

struct LossOptions {
  double temperature = 1.0;
  double random_negative_weight = 1.0;  // scale of the random-negative term
};

struct LossBreakdown {
  double total = 0.0;
  std::map<std::string, double> per_task;  // unweighted task losses
};

// Sum over tasks of mix_weight * (in-batch + random-negative loss), pairs
// shared across tasks on the same dataset. When `grads` is non-null all
// tower gradients are accumulated into it. Sampler states are read-only
// here; the trainer advances them once per step.
LossBreakdown loss_total(const Model& model, const TrainingBatch& batch,
                         std::span<const TaskSpec> tasks,
                         const std::map<DatasetKind, NegativeSamplerState>& samplers,
                         const LossOptions& options, ModelGrads* grads, TokenCache& cache);

}  // namespace osse
