#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "osse/dataset.hpp"
#include "osse/documents.hpp"

namespace osse {

struct BoardTitleCandidate {
  std::string title;
  std::uint64_t occurrence_count = 0;  // boards containing the entity with this title
  double score = 0.0;                  // filled by select_board_titles
};

using WordPrevalence = std::map<std::string, std::uint64_t>;

// Global word frequency over a board-title corpus, on normalized words.
WordPrevalence compute_word_prevalence(const std::vector<BoardMembership>& boards);

// score = occurrence_count * mean word prevalence; ranked by (score asc,
// word count desc, char length desc, title asc) so rare, specific titles
// win. Returns at most kMaxBoardTitles titles. Candidates must already be
// deduplicated by normalized title.
std::vector<std::string> select_board_titles(std::vector<BoardTitleCandidate> candidates,
                                             const WordPrevalence& prevalence);

using ActionWeights = std::map<Action, double>;

ActionWeights default_action_weights();

// Union by query string with per-action counts summed; score is the weighted
// count sum; sorted by (score desc, query asc) and truncated to max_out.
// Pass max_out = SIZE_MAX to disable truncation (associativity checks).
std::vector<EngagedQueryRecord> merge_engaged_queries(
    const std::vector<EngagedQueryRecord>& existing,
    const std::vector<EngagedQueryRecord>& new_window, const ActionWeights& weights,
    std::size_t max_out = kMaxEngagedQueries);

enum class CaptionPolicy : std::uint8_t {
  always,             // caption attached to every document
  fill_missing_only,  // only when both title and description are empty
};

// A caption source; failures must degrade to an empty caption, never throw
// through the enrichment pass.
using CaptionProvider = std::function<std::string(const EntityDocument&)>;

// Deterministic per-topic captions from the synthetic world's ground truth.
CaptionProvider fixture_caption_provider(const std::map<std::string, std::size_t>& entity_topic,
                                         const std::map<std::size_t, std::string>& topic_caption);

std::string apply_caption(const EntityDocument& doc, const CaptionProvider& provider,
                          CaptionPolicy policy);

struct EnrichmentOptions {
  ActionWeights action_weights = default_action_weights();
  CaptionPolicy caption_policy = CaptionPolicy::always;
  std::int64_t cadence_days = 7;  // engaged-query aggregation window length
};

// Full document-expansion pass: board-title selection, incremental
// engaged-query aggregation over cadence windows of the pair log, captions.
// Returns enriched copies of `docs`.
std::vector<EntityDocument> enrich_documents(const std::vector<EntityDocument>& docs,
                                             const std::vector<TrainingPair>& pairs,
                                             const std::vector<BoardMembership>& boards,
                                             const CaptionProvider& provider,
                                             const EnrichmentOptions& options);

}  // namespace osse
