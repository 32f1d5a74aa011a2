#include "srl/scene_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "json_util.hpp"

namespace srl {
namespace {

using detail::json;
using detail::ordered_json;

Violation make(ViolationCode code, std::optional<std::size_t> index, std::string subject,
               std::string detail = {}) {
  return Violation{code, index, std::move(subject), std::move(detail)};
}

std::string triplet_text(const RelationTriplet& r) {
  return r.subject_id + "|" + r.predicate + "|" + r.object_id;
}

// Strict box invariants. Returns the reason, or empty when the box is fine.
std::string bbox_problem(const BBox& b) {
  if (!std::isfinite(b.x1) || !std::isfinite(b.y1) || !std::isfinite(b.x2) ||
      !std::isfinite(b.y2)) {
    return "non-finite coordinate";
  }
  if (b.x1 == b.x2) return "zero width";
  if (b.x1 > b.x2) return "negative width";
  if (b.y1 == b.y2) return "zero height";
  if (b.y1 > b.y2) return "negative height";
  return {};
}

void check_relations(const std::vector<RelationTriplet>& relations,
                     const std::unordered_set<std::string>& ids, const ValidationOptions& options,
                     std::vector<Violation>& out) {
  for (std::size_t i = 0; i < relations.size(); ++i) {
    const auto& r = relations[i];
    if (r.subject_id.empty() || r.predicate.empty() || r.object_id.empty()) {
      out.push_back(make(ViolationCode::BadRelation, i, triplet_text(r), "empty element"));
      continue;
    }
    if (r.subject_id == r.object_id) {
      out.push_back(make(ViolationCode::SelfRelation, i, triplet_text(r)));
    }
    if (!ids.contains(r.subject_id)) {
      out.push_back(make(ViolationCode::DanglingRelationEndpoint, i, triplet_text(r),
                         "unknown subject " + r.subject_id));
    }
    if (!ids.contains(r.object_id)) {
      out.push_back(make(ViolationCode::DanglingRelationEndpoint, i, triplet_text(r),
                         "unknown object " + r.object_id));
    }
    if (options.strict_vocabulary && options.vocabulary != nullptr &&
        !options.vocabulary->contains(r.predicate)) {
      out.push_back(make(ViolationCode::UnknownPredicate, i, r.predicate));
    }
  }
}

// Duplicate ids are reported once per repeated id, at its second occurrence.
std::unordered_set<std::string> check_ids(const std::vector<ObjectNode>& objects,
                                          std::vector<Violation>& out) {
  std::unordered_set<std::string> seen;
  std::unordered_set<std::string> reported;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& id = objects[i].id;
    if (id.empty()) continue;
    if (!seen.insert(id).second && reported.insert(id).second) {
      out.push_back(make(ViolationCode::DuplicateId, i, id));
    }
  }
  return seen;
}

std::optional<std::string> string_field(const json& obj, const char* key, std::size_t index,
                                        std::vector<Violation>& out) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    out.push_back(make(ViolationCode::MissingField, index, key));
    return std::nullopt;
  }
  if (!it->is_string() || it->get_ref<const std::string&>().empty()) {
    out.push_back(make(ViolationCode::BadField, index, key, "expected non-empty string"));
    return std::nullopt;
  }
  return it->get<std::string>();
}

}  // namespace

const ObjectNode* SceneGraph::find(std::string_view id) const noexcept {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

PredicateVocabulary::PredicateVocabulary(std::set<std::string> base, std::set<std::string> extended)
    : base_(std::move(base)), extended_(std::move(extended)) {
  for (const auto& p : extended_) {
    if (base_.contains(p)) {
      throw std::invalid_argument("predicate vocabulary: '" + p + "' is in both base and extended");
    }
  }
}

PredicateVocabulary PredicateVocabulary::parse(std::string_view text) {
  std::set<std::string> base;
  std::set<std::string> extended;
  std::set<std::string>* current = nullptr;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line == "[base]") {
      current = &base;
    } else if (line == "[extended]") {
      current = &extended;
    } else if (current == nullptr) {
      throw std::invalid_argument("predicate vocabulary line " + std::to_string(lineno) +
                                  ": entry before any [base]/[extended] section");
    } else {
      current->insert(line);
    }
  }
  return PredicateVocabulary(std::move(base), std::move(extended));
}

PredicateVocabulary PredicateVocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read predicate vocabulary: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool PredicateVocabulary::contains(std::string_view predicate) const {
  std::string key(predicate);
  return base_.contains(key) || extended_.contains(key);
}

std::vector<Violation> validate_graph(const SceneGraph& graph, const ValidationOptions& options) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < graph.objects.size(); ++i) {
    const auto& o = graph.objects[i];
    if (o.id.empty()) out.push_back(make(ViolationCode::BadField, i, "id", "empty id"));
    if (o.label.empty()) out.push_back(make(ViolationCode::BadField, i, "label", "empty label"));
    if (auto why = bbox_problem(o.bbox); !why.empty()) {
      out.push_back(make(ViolationCode::BadBBox, i, o.id, why));
    } else if (graph.image_size) {
      const auto& sz = *graph.image_size;
      if (o.bbox.x1 < 0 || o.bbox.y1 < 0 || o.bbox.x2 > sz.width || o.bbox.y2 > sz.height) {
        out.push_back(make(ViolationCode::BoxOutOfBounds, i, o.id));
      }
    }
  }
  auto ids = check_ids(graph.objects, out);
  check_relations(graph.relations, ids, options, out);
  return out;
}

namespace detail {

SceneParse scene_from_json(const json& doc, const ValidationOptions& options) {
  SceneParse result;
  auto& out = result.violations;
  if (!doc.is_object()) {
    out.push_back(make(ViolationCode::NotParseable, std::nullopt, "", "root is not an object"));
    return result;
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "objects" && key != "relations") result.warnings.push_back("ignored field '" + key + "'");
  }

  SceneGraph graph;
  // Ids of every object whose id parsed, even if other fields did not; keeps
  // a bad bbox from also surfacing as dangling relation endpoints.
  std::vector<ObjectNode> id_carriers;

  auto objects = doc.find("objects");
  if (objects == doc.end()) {
    out.push_back(make(ViolationCode::MissingField, std::nullopt, "objects"));
  } else if (!objects->is_array()) {
    out.push_back(make(ViolationCode::BadField, std::nullopt, "objects", "expected array"));
  } else {
    for (std::size_t i = 0; i < objects->size(); ++i) {
      const auto& item = (*objects)[i];
      if (!item.is_object()) {
        out.push_back(make(ViolationCode::BadField, i, "object", "expected JSON object"));
        continue;
      }
      for (const auto& [key, _] : item.items()) {
        if (key != "id" && key != "label" && key != "bbox") {
          result.warnings.push_back("object " + std::to_string(i) + ": ignored field '" + key + "'");
        }
      }
      auto id = string_field(item, "id", i, out);
      auto label = string_field(item, "label", i, out);
      std::optional<BBox> box;
      auto b = item.find("bbox");
      if (b == item.end()) {
        out.push_back(make(ViolationCode::MissingField, i, "bbox"));
      } else if (!b->is_array() || b->size() != 4 ||
                 !std::all_of(b->begin(), b->end(), [](const json& v) { return v.is_number(); })) {
        out.push_back(make(ViolationCode::BadBBox, i, id.value_or(""), "expected [x1,y1,x2,y2]"));
      } else {
        BBox parsed{(*b)[0].get<double>(), (*b)[1].get<double>(), (*b)[2].get<double>(),
                    (*b)[3].get<double>()};
        if (auto why = bbox_problem(parsed); !why.empty()) {
          out.push_back(make(ViolationCode::BadBBox, i, id.value_or(""), why));
        } else {
          box = parsed;
        }
      }
      if (id) id_carriers.push_back(ObjectNode{*id, label.value_or(""), box.value_or(BBox{})});
      if (id && label && box) graph.objects.push_back(ObjectNode{*id, *label, *box});
    }
  }

  auto relations = doc.find("relations");
  if (relations == doc.end()) {
    out.push_back(make(ViolationCode::MissingField, std::nullopt, "relations"));
  } else if (!relations->is_array()) {
    out.push_back(make(ViolationCode::BadField, std::nullopt, "relations", "expected array"));
  } else {
    for (std::size_t i = 0; i < relations->size(); ++i) {
      const auto& item = (*relations)[i];
      if (!item.is_array() || item.size() != 3 ||
          !std::all_of(item.begin(), item.end(), [](const json& v) { return v.is_string(); })) {
        out.push_back(make(ViolationCode::BadRelation, i, "",
                           "expected [subject_id, predicate, object_id]"));
        continue;
      }
      graph.relations.push_back(RelationTriplet{item[0].get<std::string>(), item[1].get<std::string>(),
                                                item[2].get<std::string>()});
    }
  }

  auto ids = check_ids(id_carriers, out);
  check_relations(graph.relations, ids, options, out);

  if (out.empty()) result.graph = std::move(graph);
  return result;
}

ordered_json scene_to_json(const SceneGraph& g) {
  ordered_json objects = ordered_json::array();
  for (const auto& o : g.objects) {
    ordered_json node;
    node["id"] = o.id;
    node["label"] = o.label;
    node["bbox"] = ordered_json::array(
        {number(o.bbox.x1), number(o.bbox.y1), number(o.bbox.x2), number(o.bbox.y2)});
    objects.push_back(std::move(node));
  }
  ordered_json relations = ordered_json::array();
  for (const auto& r : g.relations) {
    relations.push_back(ordered_json::array({r.subject_id, r.predicate, r.object_id}));
  }
  ordered_json doc;
  doc["objects"] = std::move(objects);
  doc["relations"] = std::move(relations);
  return doc;
}

}  // namespace detail

SceneParse parse_scene_json(std::string_view raw, const ValidationOptions& options) {
  json doc = json::parse(raw.begin(), raw.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    SceneParse result;
    result.violations.push_back(
        make(ViolationCode::NotParseable, std::nullopt, "", "invalid JSON"));
    return result;
  }
  return detail::scene_from_json(doc, options);
}

namespace {
std::string summarize(const std::vector<Violation>& violations) {
  std::string msg = "invalid scene graph:";
  for (const auto& v : violations) msg += " " + describe(v) + ";";
  return msg;
}
}  // namespace

InvalidGraph::InvalidGraph(std::vector<Violation> violations)
    : std::runtime_error(summarize(violations)), violations_(std::move(violations)) {}

SceneGraph canonicalize(SceneGraph graph) {
  std::stable_sort(graph.objects.begin(), graph.objects.end(),
                   [](const ObjectNode& a, const ObjectNode& b) { return a.id < b.id; });
  std::stable_sort(graph.relations.begin(), graph.relations.end());
  return graph;
}

std::string serialize_scene(const SceneGraph& graph) {
  if (auto violations = validate_graph(graph); !violations.empty()) {
    throw InvalidGraph(std::move(violations));
  }
  return detail::scene_to_json(canonicalize(graph)).dump();
}

}  // namespace srl
