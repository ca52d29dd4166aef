#include "osse/enrichment.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "osse/tokenizer.hpp"

namespace osse {

WordPrevalence compute_word_prevalence(const std::vector<BoardMembership>& boards) {
  WordPrevalence prevalence;
  for (const auto& b : boards)
    for (const auto& w : normalize_words(b.board_title)) ++prevalence[w];
  return prevalence;
}

std::vector<std::string> select_board_titles(std::vector<BoardTitleCandidate> candidates,
                                             const WordPrevalence& prevalence) {
  struct Ranked {
    double score;
    std::size_t word_count;
    std::size_t length;
    std::string title;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(candidates.size());
  for (auto& c : candidates) {
    const auto words = normalize_words(c.title);
    double mean_prevalence = 0.0;
    if (!words.empty()) {
      for (const auto& w : words) {
        auto it = prevalence.find(w);
        mean_prevalence += it == prevalence.end() ? 0.0 : static_cast<double>(it->second);
      }
      mean_prevalence /= static_cast<double>(words.size());
    }
    c.score = static_cast<double>(c.occurrence_count) * mean_prevalence;
    ranked.push_back({c.score, words.size(), c.title.size(), c.title});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.word_count != b.word_count) return a.word_count > b.word_count;
    if (a.length != b.length) return a.length > b.length;
    return a.title < b.title;
  });
  std::vector<std::string> out;
  for (const auto& r : ranked) {
    out.push_back(r.title);
    if (out.size() == kMaxBoardTitles) break;
  }
  return out;
}

ActionWeights default_action_weights() {
  return {{Action::save, 2.0},
          {Action::longclick, 2.0},
          {Action::click, 1.0},
          {Action::add_to_cart, 3.0},
          {Action::checkout, 5.0}};
}

namespace {

// canonical board-title key: lowercased words joined by single spaces
std::string join_normalized(const std::string& title) {
  std::string out;
  for (const auto& w : normalize_words(title)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

double record_score(const EngagedQueryRecord& rec, const ActionWeights& weights) {
  double score = 0.0;
  for (const auto& [action, count] : rec.counts) {
    auto it = weights.find(action);
    const double w = it == weights.end() ? 0.0 : it->second;
    if (w < 0.0) throw std::invalid_argument("merge_engaged_queries: negative action weight");
    score += w * static_cast<double>(count);
  }
  return score;
}

std::vector<EngagedQueryRecord> merge_engaged_queries_impl(
    const std::vector<EngagedQueryRecord>& existing,
    const std::vector<EngagedQueryRecord>& new_window, const ActionWeights& weights,
    std::size_t max_out);

}  // namespace

std::vector<EngagedQueryRecord> merge_engaged_queries(
    const std::vector<EngagedQueryRecord>& existing,
    const std::vector<EngagedQueryRecord>& new_window, const ActionWeights& weights,
    std::size_t max_out) {
  std::map<std::string, EngagedQueryRecord> merged;
  auto absorb = [&merged](const std::vector<EngagedQueryRecord>& records) {
    for (const auto& rec : records) {
      auto& slot = merged[rec.query];
      slot.query = rec.query;
      for (const auto& [action, count] : rec.counts) slot.counts[action] += count;
    }
  };
  absorb(existing);
  absorb(new_window);

  std::vector<EngagedQueryRecord> out;
  out.reserve(merged.size());
  for (auto& [_, rec] : merged) {
    rec.score = record_score(rec, weights);
    out.push_back(std::move(rec));
  }
  std::sort(out.begin(), out.end(), [](const EngagedQueryRecord& a, const EngagedQueryRecord& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.query < b.query;
  });
  if (out.size() > max_out) out.resize(max_out);
  return out;
}

CaptionProvider fixture_caption_provider(const std::map<std::string, std::size_t>& entity_topic,
                                         const std::map<std::size_t, std::string>& topic_caption) {
  return [entity_topic, topic_caption](const EntityDocument& doc) -> std::string {
    auto t = entity_topic.find(doc.entity_id);
    if (t == entity_topic.end()) return "";
    auto c = topic_caption.find(t->second);
    return c == topic_caption.end() ? "" : c->second;
  };
}

std::string apply_caption(const EntityDocument& doc, const CaptionProvider& provider,
                          CaptionPolicy policy) {
  if (policy == CaptionPolicy::fill_missing_only &&
      (!doc.title.empty() || !doc.description.empty()))
    return doc.synthetic_caption;
  try {
    return provider(doc);
  } catch (const std::exception&) {
    return "";  // provider failure is never fatal
  }
}

std::vector<EntityDocument> enrich_documents(const std::vector<EntityDocument>& docs,
                                             const std::vector<TrainingPair>& pairs,
                                             const std::vector<BoardMembership>& boards,
                                             const CaptionProvider& provider,
                                             const EnrichmentOptions& options) {
  if (options.cadence_days < 1)
    throw std::invalid_argument("enrich_documents: cadence_days must be >= 1");

  // board-title candidates per entity, deduplicated by normalized title
  const WordPrevalence prevalence = compute_word_prevalence(boards);
  std::unordered_map<std::string, std::map<std::string, BoardTitleCandidate>> board_candidates;
  for (const auto& b : boards) {
    const std::string norm = join_normalized(b.board_title);
    if (norm.empty()) continue;
    auto& slot = board_candidates[b.entity_id][norm];
    if (slot.title.empty()) slot.title = norm;
    ++slot.occurrence_count;
  }

  // engaged queries folded incrementally over cadence windows of the log
  std::int64_t max_day = 0;
  for (const auto& p : pairs) max_day = std::max(max_day, p.day);
  const std::size_t n_windows =
      pairs.empty() ? 0
                    : static_cast<std::size_t>(max_day / options.cadence_days) + 1;
  std::unordered_map<std::string, std::vector<std::vector<EngagedQueryRecord>>> windows;
  for (const auto& p : pairs) {
    auto& per_entity = windows[p.entity_id];
    if (per_entity.empty()) per_entity.resize(n_windows);
    const std::size_t w = static_cast<std::size_t>(p.day / options.cadence_days);
    auto& window = per_entity[w];
    auto it = std::find_if(window.begin(), window.end(),
                           [&p](const EngagedQueryRecord& r) { return r.query == p.query; });
    if (it == window.end()) {
      EngagedQueryRecord rec;
      rec.query = p.query;
      rec.counts[p.action] = 1;
      window.push_back(std::move(rec));
    } else {
      ++it->counts[p.action];
    }
  }

  std::vector<EntityDocument> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    EntityDocument enriched = doc;

    auto bc = board_candidates.find(doc.entity_id);
    if (bc != board_candidates.end()) {
      std::vector<BoardTitleCandidate> candidates;
      for (const auto& [_, cand] : bc->second) candidates.push_back(cand);
      enriched.board_titles = select_board_titles(std::move(candidates), prevalence);
    }

    auto wq = windows.find(doc.entity_id);
    if (wq != windows.end()) {
      std::vector<EngagedQueryRecord> top;
      for (const auto& window : wq->second)
        top = merge_engaged_queries(top, window, options.action_weights);
      enriched.engaged_queries = std::move(top);
    }

    enriched.synthetic_caption = apply_caption(enriched, provider, options.caption_policy);
    out.push_back(std::move(enriched));
  }
  return out;
}

}  // namespace osse
