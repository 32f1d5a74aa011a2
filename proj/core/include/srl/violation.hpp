#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace srl {

enum class ViolationCode {
  // scene JSON
  NotParseable,
  MissingField,
  BadField,
  BadBBox,
  BoxOutOfBounds,
  BadRelation,
  SelfRelation,
  DanglingRelationEndpoint,
  DuplicateId,
  UnknownPredicate,
  // tag structure
  MissingTag,
  DuplicateTag,
  OutOfOrder,
  UnclosedTag,
  NestedTag,
};

std::string_view to_string(ViolationCode code) noexcept;

/// One schema or structure problem. `index` names the offending object,
/// relation or tag position when there is one; `subject` carries the id,
/// field or tag name, and `detail` a human-readable reason.
struct Violation {
  ViolationCode code{};
  std::optional<std::size_t> index;
  std::string subject;
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// "MissingField[0](label)" style rendering, stable for logs and tests.
std::string describe(const Violation& v);

bool contains_code(const std::vector<Violation>& violations, ViolationCode code);

}  // namespace srl
