#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "osse/documents.hpp"
#include "osse/loss.hpp"
#include "osse/rng.hpp"

namespace osse {

// The atom of every task dataset. Timestamps are integer day indices.
struct TrainingPair {
  std::string query;
  std::string entity_id;
  Action action = Action::save;
  std::int64_t day = 0;

  std::string to_json_line() const;
  static TrainingPair from_json_line(const std::string& line);
};

std::vector<TrainingPair> load_pairs(const std::string& path);
void save_pairs(const std::vector<TrainingPair>& pairs, const std::string& path);

struct PairDataset {
  DatasetKind kind = DatasetKind::query_pin;
  std::vector<TrainingPair> pairs;
  std::size_t cap = 0;  // per-entity max pair count applied at build time
};

// Caps the number of pairs per entity at `cap` by uniform seeded sampling;
// entities at or under the cap are untouched, surviving pairs keep their
// original order. Throws when cap < 1.
std::vector<TrainingPair> apply_dedup_cap(const std::vector<TrainingPair>& pairs, std::size_t cap,
                                          std::uint64_t seed);

struct SplitResult {
  std::vector<TrainingPair> train;
  std::vector<TrainingPair> eval;
};

// train: day <= train_end_day; eval: train_end_day + gap < day <=
// train_end_day + gap + eval_days. The gap window lands in neither set.
SplitResult temporal_split(const std::vector<TrainingPair>& pairs, std::int64_t train_end_day,
                           std::int64_t gap_days, std::int64_t eval_days);

// One (entity, board title) membership row; duplicates mean multiple boards
// with the same title contain the entity.
struct BoardMembership {
  std::string entity_id;
  std::string board_title;
};

struct WorldSizes {
  std::size_t entities = 2000;
  std::size_t queries = 500;
  std::size_t topics = 20;
  std::size_t aspects_per_topic = 5;
  std::size_t days = 120;
  std::size_t pin_pairs = 40000;
  std::size_t product_pairs = 12000;
  std::size_t query_pairs = 12000;
  double product_fraction = 0.3;
  double within_topic = 0.9;
  double within_aspect = 0.9;  // given a within-topic draw
  double title_coverage = 0.71;
  double board_coverage = 0.91;
  double offsite_fraction = 0.2;  // product pairs carrying offsite actions
  double query_zipf_s = 1.0;
  std::size_t feature_dim = 16;
  std::size_t compat_dim = 64;  // must match the embedding dim in training
};

// Topic-structured synthetic engagement world standing in for production
// logs. Fully reproducible from (seed, sizes).
struct SyntheticWorld {
  WorldSizes sizes;
  std::vector<EntityDocument> entities;    // pins and products, pre-enrichment
  std::vector<EntityDocument> query_docs;  // related-query documents (kind=query)
  std::vector<TrainingPair> pin_pairs;
  std::vector<TrainingPair> product_pairs;
  std::vector<TrainingPair> query_pairs;
  std::vector<BoardMembership> boards;
  std::map<std::string, std::size_t> entity_topic;  // ground truth, by id
  std::map<std::string, std::size_t> entity_aspect;
  std::map<std::string, std::size_t> query_topic;   // by query text
  std::map<std::string, std::size_t> query_aspect;
  std::map<std::size_t, std::string> topic_caption;

  const std::vector<TrainingPair>& pairs_for(DatasetKind kind) const;

  void save(const std::string& dir) const;
  static SyntheticWorld load(const std::string& dir);
};

SyntheticWorld generate_synthetic_world(std::uint64_t seed, const WorldSizes& sizes);

std::vector<BoardMembership> load_boards(const std::string& path);
void save_boards(const std::vector<BoardMembership>& boards, const std::string& path);

}  // namespace osse
