#include "osse/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace osse {

using nlohmann::json;
namespace fs = std::filesystem;

std::string TrainingPair::to_json_line() const {
  json j;
  j["query"] = query;
  j["entity_id"] = entity_id;
  j["action"] = std::string(action_name(action));
  j["day"] = day;
  return j.dump();
}

TrainingPair TrainingPair::from_json_line(const std::string& line) {
  const json j = json::parse(line);
  TrainingPair p;
  p.query = j.at("query").get<std::string>();
  p.entity_id = j.at("entity_id").get<std::string>();
  p.action = action_from_name(j.at("action").get<std::string>());
  p.day = j.at("day").get<std::int64_t>();
  if (p.query.empty()) throw std::invalid_argument("TrainingPair: empty query");
  return p;
}

std::vector<TrainingPair> load_pairs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read pairs file: " + path);
  std::vector<TrainingPair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    pairs.push_back(TrainingPair::from_json_line(line));
  }
  return pairs;
}

void save_pairs(const std::vector<TrainingPair>& pairs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write pairs file: " + path);
  for (const auto& p : pairs) out << p.to_json_line() << '\n';
}

std::vector<TrainingPair> apply_dedup_cap(const std::vector<TrainingPair>& pairs, std::size_t cap,
                                          std::uint64_t seed) {
  if (cap < 1) throw std::invalid_argument("apply_dedup_cap: cap must be >= 1");
  std::unordered_map<std::string, std::vector<std::size_t>> by_entity;
  for (std::size_t i = 0; i < pairs.size(); ++i) by_entity[pairs[i].entity_id].push_back(i);

  std::vector<bool> keep(pairs.size(), true);
  for (auto& [entity_id, indices] : by_entity) {
    if (indices.size() <= cap) continue;
    // seeded per entity so the selection is independent of map iteration order
    Rng rng(hash_u64(seed ^ fnv1a(entity_id)));
    std::vector<std::size_t> pool = indices;
    rng.shuffle(pool);
    pool.resize(cap);
    std::set<std::size_t> chosen(pool.begin(), pool.end());
    for (std::size_t idx : indices) keep[idx] = chosen.count(idx) > 0;
  }
  std::vector<TrainingPair> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (keep[i]) out.push_back(pairs[i]);
  return out;
}

SplitResult temporal_split(const std::vector<TrainingPair>& pairs, std::int64_t train_end_day,
                           std::int64_t gap_days, std::int64_t eval_days) {
  if (gap_days < 0) throw std::invalid_argument("temporal_split: gap_days must be >= 0");
  if (eval_days < 0) throw std::invalid_argument("temporal_split: eval_days must be >= 0");
  const std::int64_t eval_start = train_end_day + gap_days;  // exclusive
  const std::int64_t eval_end = eval_start + eval_days;      // inclusive
  SplitResult out;
  for (const auto& p : pairs) {
    if (p.day <= train_end_day)
      out.train.push_back(p);
    else if (p.day > eval_start && p.day <= eval_end)
      out.eval.push_back(p);
  }
  return out;
}

std::vector<BoardMembership> load_boards(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read boards file: " + path);
  std::vector<BoardMembership> boards;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    boards.push_back({j.at("entity_id").get<std::string>(),
                      j.at("board_title").get<std::string>()});
  }
  return boards;
}

void save_boards(const std::vector<BoardMembership>& boards, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write boards file: " + path);
  for (const auto& b : boards) {
    json j;
    j["entity_id"] = b.entity_id;
    j["board_title"] = b.board_title;
    out << j.dump() << '\n';
  }
}

const std::vector<TrainingPair>& SyntheticWorld::pairs_for(DatasetKind kind) const {
  switch (kind) {
    case DatasetKind::query_pin: return pin_pairs;
    case DatasetKind::query_product: return product_pairs;
    case DatasetKind::query_query: return query_pairs;
  }
  throw std::invalid_argument("unknown dataset kind");
}

namespace {

constexpr const char* kConsonants[] = {"b", "d", "f", "g", "k", "l", "m", "n",
                                       "p", "r", "s", "t", "v", "z", "ch", "sh"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ia", "ei", "ou"};

// Pronounceable nonsense word of 2-3 syllables.
std::string make_word(Rng& rng) {
  const std::size_t syllables = 2 + rng.uniform_int(2);
  std::string w;
  for (std::size_t s = 0; s < syllables; ++s) {
    w += kConsonants[rng.uniform_int(std::size(kConsonants))];
    w += kVowels[rng.uniform_int(std::size(kVowels))];
  }
  return w;
}

const std::vector<std::string> kGenericBoardWords = {
    "ideas", "inspiration", "favorites", "style", "diy", "decor", "tips", "goals", "mood", "home"};

struct TopicVocab {
  std::vector<std::string> shared;                    // topic-wide words
  std::vector<std::vector<std::string>> aspect_words;  // per aspect
};

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

// k distinct picks (with replacement collapsed) from a pool.
std::vector<std::string> pick_words(Rng& rng, const std::vector<std::string>& pool,
                                    std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k && out.size() < pool.size(); ++i) {
    const std::string& w = pool[rng.uniform_int(pool.size())];
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  }
  return out;
}

}  // namespace

SyntheticWorld generate_synthetic_world(std::uint64_t seed, const WorldSizes& sizes) {
  if (sizes.entities == 0 || sizes.queries == 0 || sizes.topics == 0 ||
      sizes.aspects_per_topic == 0 || sizes.days == 0)
    throw std::invalid_argument("generate_synthetic_world: sizes must be positive");

  SyntheticWorld world;
  world.sizes = sizes;
  Rng root(seed);

  // per-topic vocabulary: disjoint aspect pools plus shared topic words
  Rng word_rng = root.substream("words");
  std::set<std::string> used;
  auto fresh_word = [&]() {
    for (;;) {
      std::string w = make_word(word_rng);
      if (used.insert(w).second) return w;
    }
  };
  std::vector<TopicVocab> vocab(sizes.topics);
  for (std::size_t t = 0; t < sizes.topics; ++t) {
    for (std::size_t i = 0; i < 6; ++i) vocab[t].shared.push_back(fresh_word());
    vocab[t].aspect_words.resize(sizes.aspects_per_topic);
    for (std::size_t a = 0; a < sizes.aspects_per_topic; ++a)
      for (std::size_t i = 0; i < 6; ++i) vocab[t].aspect_words[a].push_back(fresh_word());
  }
  for (std::size_t t = 0; t < sizes.topics; ++t) {
    const auto caption_words = pick_words(word_rng, vocab[t].shared, 3);
    world.topic_caption[t] = "a collection of " + join_words(caption_words) + " pieces";
  }

  // per-topic centroids for the fixture continuous features
  Rng feat_rng = root.substream("features");
  auto random_vec = [&feat_rng](std::size_t dim) {
    Vec v(dim);
    for (auto& x : v) x = feat_rng.normal();
    return v;
  };
  std::vector<Vec> graph_centroid(sizes.topics), visual_centroid(sizes.topics),
      item_centroid(sizes.topics);
  for (std::size_t t = 0; t < sizes.topics; ++t) {
    graph_centroid[t] = random_vec(sizes.feature_dim);
    visual_centroid[t] = random_vec(sizes.feature_dim);
    item_centroid[t] = random_vec(sizes.feature_dim);
  }
  // aspect-level centroids for the frozen compatibility embeddings
  std::vector<std::vector<Vec>> compat_centroid(sizes.topics);
  for (std::size_t t = 0; t < sizes.topics; ++t)
    for (std::size_t a = 0; a < sizes.aspects_per_topic; ++a)
      compat_centroid[t].push_back(random_vec(sizes.compat_dim));

  // entities: deterministic round-robin over (topic, aspect); ~product_fraction products
  Rng doc_rng = root.substream("docs");
  char id_buf[32];
  std::vector<std::vector<std::size_t>> pins_by_bucket(sizes.topics * sizes.aspects_per_topic);
  std::vector<std::vector<std::size_t>> products_by_bucket(sizes.topics * sizes.aspects_per_topic);
  std::vector<std::size_t> all_pins, all_products;
  for (std::size_t i = 0; i < sizes.entities; ++i) {
    const std::size_t t = i % sizes.topics;
    const std::size_t a = (i / sizes.topics) % sizes.aspects_per_topic;
    const bool is_product = (i % 10) < static_cast<std::size_t>(sizes.product_fraction * 10.0);
    EntityDocument doc;
    std::snprintf(id_buf, sizeof(id_buf), "%s%05zu", is_product ? "prod" : "pin", i);
    doc.entity_id = id_buf;
    doc.kind = is_product ? EntityKind::product : EntityKind::pin;

    std::vector<std::string> text_pool = vocab[t].aspect_words[a];
    text_pool.insert(text_pool.end(), vocab[t].shared.begin(), vocab[t].shared.end());
    if (doc_rng.bernoulli(sizes.title_coverage)) {
      doc.title = join_words(pick_words(doc_rng, text_pool, 2 + doc_rng.uniform_int(3)));
      if (doc_rng.bernoulli(0.7))
        doc.description = join_words(pick_words(doc_rng, text_pool, 3 + doc_rng.uniform_int(5)));
    }

    auto noisy = [&doc_rng](const Vec& centroid, double noise) {
      Vec v = centroid;
      for (auto& x : v) x += noise * doc_rng.normal();
      return v;
    };
    doc.continuous_features["graph"] = noisy(graph_centroid[t], 0.35);
    doc.continuous_features["visual"] = noisy(visual_centroid[t], 0.35);
    if (is_product) doc.continuous_features["item"] = noisy(item_centroid[t], 0.35);
    doc.compat_embedding = l2_normalize(noisy(compat_centroid[t][a], 0.45)).values;

    if (doc_rng.bernoulli(sizes.board_coverage)) {
      const std::size_t n_boards = 1 + doc_rng.uniform_int(8);
      for (std::size_t b = 0; b < n_boards; ++b) {
        std::vector<std::string> words = pick_words(doc_rng, text_pool, 1 + doc_rng.uniform_int(2));
        if (doc_rng.bernoulli(0.5))
          words.push_back(kGenericBoardWords[doc_rng.uniform_int(kGenericBoardWords.size())]);
        world.boards.push_back({doc.entity_id, join_words(words)});
      }
    }

    world.entity_topic[doc.entity_id] = t;
    world.entity_aspect[doc.entity_id] = a;
    const std::size_t bucket = t * sizes.aspects_per_topic + a;
    if (is_product) {
      products_by_bucket[bucket].push_back(i);
      all_products.push_back(i);
    } else {
      pins_by_bucket[bucket].push_back(i);
      all_pins.push_back(i);
    }
    world.entities.push_back(std::move(doc));
  }
  if (all_pins.empty() || all_products.empty())
    throw std::invalid_argument("generate_synthetic_world: need both pins and products");

  // queries: short texts over one aspect pool, unique
  Rng query_rng = root.substream("queries");
  std::set<std::string> seen_queries;
  std::vector<std::string> query_texts;
  std::vector<std::size_t> query_topics_v, query_aspects_v;
  for (std::size_t qi = 0; qi < sizes.queries; ++qi) {
    const std::size_t t = qi % sizes.topics;
    const std::size_t a = (qi / sizes.topics) % sizes.aspects_per_topic;
    std::string text;
    for (int attempt = 0; attempt < 64; ++attempt) {
      std::vector<std::string> words =
          pick_words(query_rng, vocab[t].aspect_words[a], 1 + query_rng.uniform_int(3));
      if (query_rng.bernoulli(0.3))
        words.push_back(vocab[t].shared[query_rng.uniform_int(vocab[t].shared.size())]);
      text = join_words(words);
      if (seen_queries.insert(text).second) break;
      text.clear();
    }
    if (text.empty()) {
      // exhausted the aspect's phrase space; disambiguate deterministically
      text = vocab[t].aspect_words[a][0] + " " + std::to_string(qi);
      seen_queries.insert(text);
    }
    EntityDocument qdoc;
    std::snprintf(id_buf, sizeof(id_buf), "qry%05zu", qi);
    qdoc.entity_id = id_buf;
    qdoc.kind = EntityKind::query;
    qdoc.title = text;
    world.query_docs.push_back(std::move(qdoc));
    world.query_topic[text] = t;
    world.query_aspect[text] = a;
    query_texts.push_back(std::move(text));
    query_topics_v.push_back(t);
    query_aspects_v.push_back(a);
  }

  // engagement pairs: Zipf-skewed queries, mostly within topic and aspect
  Rng pair_rng = root.substream("pairs");
  const ZipfSampler query_dist(sizes.queries, sizes.query_zipf_s);

  auto draw_entity = [&](std::size_t t, std::size_t a, bool product,
                         bool within_topic) -> std::size_t {
    const auto& by_bucket = product ? products_by_bucket : pins_by_bucket;
    const auto& all = product ? all_products : all_pins;
    if (!within_topic) return all[pair_rng.uniform_int(all.size())];
    if (!pair_rng.bernoulli(sizes.within_aspect)) a = pair_rng.uniform_int(sizes.aspects_per_topic);
    const auto& bucket = by_bucket[t * sizes.aspects_per_topic + a];
    if (!bucket.empty()) return bucket[pair_rng.uniform_int(bucket.size())];
    // no entity of this kind in the bucket; fall back to the whole topic
    std::vector<std::size_t> topic_pool;
    for (std::size_t aa = 0; aa < sizes.aspects_per_topic; ++aa) {
      const auto& b = by_bucket[t * sizes.aspects_per_topic + aa];
      topic_pool.insert(topic_pool.end(), b.begin(), b.end());
    }
    if (!topic_pool.empty()) return topic_pool[pair_rng.uniform_int(topic_pool.size())];
    return all[pair_rng.uniform_int(all.size())];
  };

  auto gen_entity_pairs = [&](std::size_t count, bool product, std::vector<TrainingPair>& out) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t qi = query_dist.sample(pair_rng);
      const bool within = pair_rng.bernoulli(sizes.within_topic);
      const std::size_t ei = draw_entity(query_topics_v[qi], query_aspects_v[qi], product, within);
      TrainingPair p;
      p.query = query_texts[qi];
      p.entity_id = world.entities[ei].entity_id;
      if (product && pair_rng.bernoulli(sizes.offsite_fraction))
        p.action = pair_rng.bernoulli(0.7) ? Action::add_to_cart : Action::checkout;
      else
        p.action = pair_rng.bernoulli(0.5) ? Action::save : Action::longclick;
      p.day = static_cast<std::int64_t>(pair_rng.uniform_int(sizes.days));
      out.push_back(std::move(p));
    }
  };
  gen_entity_pairs(sizes.pin_pairs, false, world.pin_pairs);
  gen_entity_pairs(sizes.product_pairs, true, world.product_pairs);

  for (std::size_t i = 0; i < sizes.query_pairs; ++i) {
    const std::size_t qi = query_dist.sample(pair_rng);
    const bool within = pair_rng.bernoulli(sizes.within_topic);
    std::size_t other;
    if (within) {
      // related query from the same topic, usually the same aspect
      const std::size_t t = query_topics_v[qi];
      std::size_t a = query_aspects_v[qi];
      if (!pair_rng.bernoulli(sizes.within_aspect)) a = pair_rng.uniform_int(sizes.aspects_per_topic);
      std::vector<std::size_t> pool;
      for (std::size_t j = 0; j < sizes.queries; ++j)
        if (j != qi && query_topics_v[j] == t && query_aspects_v[j] == a) pool.push_back(j);
      if (pool.empty())
        for (std::size_t j = 0; j < sizes.queries; ++j)
          if (j != qi && query_topics_v[j] == t) pool.push_back(j);
      other = pool.empty() ? (qi + 1) % sizes.queries : pool[pair_rng.uniform_int(pool.size())];
    } else {
      other = pair_rng.uniform_int(sizes.queries);
      if (other == qi) other = (other + 1) % sizes.queries;
    }
    TrainingPair p;
    p.query = query_texts[qi];
    p.entity_id = world.query_docs[other].entity_id;
    p.action = Action::click;
    p.day = static_cast<std::int64_t>(pair_rng.uniform_int(sizes.days));
    world.query_pairs.push_back(std::move(p));
  }

  return world;
}

void SyntheticWorld::save(const std::string& dir) const {
  fs::create_directories(dir);
  save_documents(entities, (fs::path(dir) / "entities.jsonl").string());
  save_documents(query_docs, (fs::path(dir) / "queries.jsonl").string());
  save_pairs(pin_pairs, (fs::path(dir) / "pairs_pin.jsonl").string());
  save_pairs(product_pairs, (fs::path(dir) / "pairs_product.jsonl").string());
  save_pairs(query_pairs, (fs::path(dir) / "pairs_query.jsonl").string());
  save_boards(boards, (fs::path(dir) / "boards.jsonl").string());

  json j;
  j["topics"] = sizes.topics;
  j["aspects_per_topic"] = sizes.aspects_per_topic;
  j["days"] = sizes.days;
  j["entity_topic"] = entity_topic;
  j["entity_aspect"] = entity_aspect;
  j["query_topic"] = query_topic;
  j["query_aspect"] = query_aspect;
  json captions;
  for (const auto& [t, caption] : topic_caption) captions[std::to_string(t)] = caption;
  j["topic_caption"] = captions;
  std::ofstream out(fs::path(dir) / "world.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write world.json in " + dir);
  out << j.dump(2) << '\n';
}

SyntheticWorld SyntheticWorld::load(const std::string& dir) {
  SyntheticWorld world;
  world.entities = load_documents((fs::path(dir) / "entities.jsonl").string());
  world.query_docs = load_documents((fs::path(dir) / "queries.jsonl").string());
  world.pin_pairs = load_pairs((fs::path(dir) / "pairs_pin.jsonl").string());
  world.product_pairs = load_pairs((fs::path(dir) / "pairs_product.jsonl").string());
  world.query_pairs = load_pairs((fs::path(dir) / "pairs_query.jsonl").string());
  world.boards = load_boards((fs::path(dir) / "boards.jsonl").string());

  std::ifstream in(fs::path(dir) / "world.json", std::ios::binary);
  if (!in) throw std::runtime_error("cannot read world.json in " + dir);
  json j;
  in >> j;
  world.sizes.topics = j.at("topics").get<std::size_t>();
  world.sizes.aspects_per_topic = j.at("aspects_per_topic").get<std::size_t>();
  world.sizes.days = j.at("days").get<std::size_t>();
  world.entity_topic = j.at("entity_topic").get<std::map<std::string, std::size_t>>();
  world.entity_aspect = j.at("entity_aspect").get<std::map<std::string, std::size_t>>();
  world.query_topic = j.at("query_topic").get<std::map<std::string, std::size_t>>();
  world.query_aspect = j.at("query_aspect").get<std::map<std::string, std::size_t>>();
  for (const auto& [key, caption] : j.at("topic_caption").items())
    world.topic_caption[std::stoull(key)] = caption.get<std::string>();
  return world;
}

}  // namespace osse
