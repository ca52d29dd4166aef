#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "osse/core_math.hpp"

namespace osse {

enum class EntityKind : std::uint8_t { pin, product, query };

std::string_view entity_kind_name(EntityKind kind);
EntityKind entity_kind_from_name(std::string_view name);

enum class Action : std::uint8_t { save, longclick, click, add_to_cart, checkout };

std::string_view action_name(Action action);
Action action_from_name(std::string_view name);  // accepts "repin" as an alias of "save"

// Engagement-derived query descriptor attached to an entity: the query text
// plus per-action engagement counts. score is the weighted sum assigned by
// the enrichment pass.
struct EngagedQueryRecord {
  std::string query;
  std::map<Action, std::uint64_t> counts;
  double score = 0.0;

  std::uint64_t total_count() const;
};

constexpr std::size_t kMaxBoardTitles = 10;
constexpr std::size_t kMaxEngagedQueries = 20;

// One pin/product record (or a related-query treated as a document): native
// text, enrichment text, fixed continuous feature vectors, and an optional
// frozen compatibility embedding.
struct EntityDocument {
  std::string entity_id;
  EntityKind kind = EntityKind::pin;
  std::string title;
  std::string description;
  std::string synthetic_caption;
  std::vector<std::string> board_titles;          // <= kMaxBoardTitles
  std::vector<EngagedQueryRecord> engaged_queries;  // <= kMaxEngagedQueries
  std::map<std::string, Vec> continuous_features;
  std::optional<Vec> compat_embedding;

  void validate() const;

  std::string to_json_line() const;
  static EntityDocument from_json_line(const std::string& line);
};

std::vector<EntityDocument> load_documents(const std::string& path);
void save_documents(const std::vector<EntityDocument>& docs, const std::string& path);

}  // namespace osse
