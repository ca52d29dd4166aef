#include "osse/documents.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace osse {

using nlohmann::json;

std::string_view entity_kind_name(EntityKind kind) {
  switch (kind) {
    case EntityKind::pin: return "pin";
    case EntityKind::product: return "product";
    case EntityKind::query: return "query";
  }
  throw std::invalid_argument("unknown entity kind");
}

EntityKind entity_kind_from_name(std::string_view name) {
  if (name == "pin") return EntityKind::pin;
  if (name == "product") return EntityKind::product;
  if (name == "query") return EntityKind::query;
  throw std::invalid_argument("unknown entity kind: " + std::string(name));
}

std::string_view action_name(Action action) {
  switch (action) {
    case Action::save: return "save";
    case Action::longclick: return "longclick";
    case Action::click: return "click";
    case Action::add_to_cart: return "add_to_cart";
    case Action::checkout: return "checkout";
  }
  throw std::invalid_argument("unknown action");
}

Action action_from_name(std::string_view name) {
  if (name == "save" || name == "repin") return Action::save;
  if (name == "longclick") return Action::longclick;
  if (name == "click") return Action::click;
  if (name == "add_to_cart") return Action::add_to_cart;
  if (name == "checkout") return Action::checkout;
  throw std::invalid_argument("unknown action: " + std::string(name));
}

std::uint64_t EngagedQueryRecord::total_count() const {
  std::uint64_t total = 0;
  for (const auto& [_, c] : counts) total += c;
  return total;
}

void EntityDocument::validate() const {
  if (entity_id.empty()) throw std::invalid_argument("EntityDocument: empty entity_id");
  if (board_titles.size() > kMaxBoardTitles)
    throw std::invalid_argument("EntityDocument: more than 10 board titles");
  if (engaged_queries.size() > kMaxEngagedQueries)
    throw std::invalid_argument("EntityDocument: more than 20 engaged queries");
}

std::string EntityDocument::to_json_line() const {
  json j;
  j["entity_id"] = entity_id;
  j["kind"] = std::string(entity_kind_name(kind));
  if (!title.empty()) j["title"] = title;
  if (!description.empty()) j["description"] = description;
  if (!synthetic_caption.empty()) j["synthetic_caption"] = synthetic_caption;
  if (!board_titles.empty()) j["board_titles"] = board_titles;
  if (!engaged_queries.empty()) {
    json arr = json::array();
    for (const auto& eq : engaged_queries) {
      json e;
      e["query"] = eq.query;
      json counts;
      for (const auto& [action, c] : eq.counts) counts[std::string(action_name(action))] = c;
      e["counts"] = counts;
      arr.push_back(e);
    }
    j["engaged_queries"] = arr;
  }
  if (!continuous_features.empty()) {
    json feats;
    for (const auto& [name, vec] : continuous_features) feats[name] = vec;
    j["continuous_features"] = feats;
  }
  if (compat_embedding) j["compat_embedding"] = *compat_embedding;
  return j.dump();
}

EntityDocument EntityDocument::from_json_line(const std::string& line) {
  const json j = json::parse(line);
  EntityDocument doc;
  doc.entity_id = j.at("entity_id").get<std::string>();
  doc.kind = entity_kind_from_name(j.at("kind").get<std::string>());
  doc.title = j.value("title", "");
  doc.description = j.value("description", "");
  doc.synthetic_caption = j.value("synthetic_caption", "");
  if (j.contains("board_titles")) doc.board_titles = j["board_titles"].get<std::vector<std::string>>();
  if (j.contains("engaged_queries")) {
    for (const auto& e : j["engaged_queries"]) {
      EngagedQueryRecord rec;
      rec.query = e.at("query").get<std::string>();
      if (e.contains("counts"))
        for (const auto& [name, c] : e["counts"].items())
          rec.counts[action_from_name(name)] = c.get<std::uint64_t>();
      doc.engaged_queries.push_back(std::move(rec));
    }
  }
  if (j.contains("continuous_features"))
    for (const auto& [name, vec] : j["continuous_features"].items())
      doc.continuous_features[name] = vec.get<Vec>();
  if (j.contains("compat_embedding")) doc.compat_embedding = j["compat_embedding"].get<Vec>();
  doc.validate();
  return doc;
}

std::vector<EntityDocument> load_documents(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read documents file: " + path);
  std::vector<EntityDocument> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    docs.push_back(EntityDocument::from_json_line(line));
  }
  return docs;
}

void save_documents(const std::vector<EntityDocument>& docs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write documents file: " + path);
  for (const auto& d : docs) out << d.to_json_line() << '\n';
}

}  // namespace osse
