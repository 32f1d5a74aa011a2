#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "srl/violation.hpp"

namespace srl {

/// Axis-aligned box in absolute pixel coordinates, (x1, y1) top-left and
/// (x2, y2) bottom-right. Real-valued; model outputs may carry fractions.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  double center_x() const noexcept { return 0.5 * (x1 + x2); }
  double center_y() const noexcept { return 0.5 * (y1 + y2); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct ImageSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct ObjectNode {
  std::string id;
  std::string label;
  BBox bbox;
  friend bool operator==(const ObjectNode&, const ObjectNode&) = default;
};

struct RelationTriplet {
  std::string subject_id;
  std::string predicate;
  std::string object_id;
  friend bool operator==(const RelationTriplet&, const RelationTriplet&) = default;
  friend auto operator<=>(const RelationTriplet&, const RelationTriplet&) = default;
};

/// Directed scene graph. A question-aligned subgraph is also a SceneGraph.
struct SceneGraph {
  std::vector<ObjectNode> objects;
  std::vector<RelationTriplet> relations;
  std::optional<ImageSize> image_size;

  const ObjectNode* find(std::string_view id) const noexcept;
  friend bool operator==(const SceneGraph&, const SceneGraph&) = default;
};

/// Legal predicate set for strict-vocabulary validation: the base set plus
/// the extended spatial predicates. The two halves must be disjoint.
class PredicateVocabulary {
 public:
  PredicateVocabulary() = default;
  PredicateVocabulary(std::set<std::string> base, std::set<std::string> extended);

  /// Reads a plain-text vocabulary file with `[base]` and `[extended]`
  /// sections, one predicate per line. `#` starts a comment.
  static PredicateVocabulary load(const std::string& path);
  static PredicateVocabulary parse(std::string_view text);

  bool contains(std::string_view predicate) const;
  const std::set<std::string>& base() const noexcept { return base_; }
  const std::set<std::string>& extended() const noexcept { return extended_; }

 private:
  std::set<std::string> base_;
  std::set<std::string> extended_;
};

struct ValidationOptions {
  const PredicateVocabulary* vocabulary = nullptr;
  bool strict_vocabulary = false;
};

struct SceneParse {
  std::optional<SceneGraph> graph;
  std::vector<Violation> violations;
  /// Unknown fields are reported here and otherwise ignored.
  std::vector<std::string> warnings;

  bool ok() const noexcept { return graph.has_value(); }
};

/// Parses a scene JSON payload. Every violation found is reported, not just
/// the first; a graph is returned only when there are none.
SceneParse parse_scene_json(std::string_view raw, const ValidationOptions& options = {});

std::vector<Violation> validate_graph(const SceneGraph& graph,
                                      const ValidationOptions& options = {});

class InvalidGraph : public std::runtime_error {
 public:
  explicit InvalidGraph(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Objects sorted by id, relations sorted by (subject, predicate, object).
SceneGraph canonicalize(SceneGraph graph);

/// Canonical JSON: sorted objects and relations, fields in id/label/bbox
/// order, integral coordinates written without a fraction. Throws
/// InvalidGraph when validate_graph reports anything.
std::string serialize_scene(const SceneGraph& graph);

}  // namespace srl
