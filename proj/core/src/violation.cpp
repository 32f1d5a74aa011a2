#include "srl/violation.hpp"

#include <algorithm>

namespace srl {

std::string_view to_string(ViolationCode code) noexcept {
  switch (code) {
    case ViolationCode::NotParseable: return "NotParseable";
    case ViolationCode::MissingField: return "MissingField";
    case ViolationCode::BadField: return "BadField";
    case ViolationCode::BadBBox: return "BadBBox";
    case ViolationCode::BoxOutOfBounds: return "BoxOutOfBounds";
    case ViolationCode::BadRelation: return "BadRelation";
    case ViolationCode::SelfRelation: return "SelfRelation";
    case ViolationCode::DanglingRelationEndpoint: return "DanglingRelationEndpoint";
    case ViolationCode::DuplicateId: return "DuplicateId";
    case ViolationCode::UnknownPredicate: return "UnknownPredicate";
    case ViolationCode::MissingTag: return "MissingTag";
    case ViolationCode::DuplicateTag: return "DuplicateTag";
    case ViolationCode::OutOfOrder: return "OutOfOrder";
    case ViolationCode::UnclosedTag: return "UnclosedTag";
    case ViolationCode::NestedTag: return "NestedTag";
  }
  return "Unknown";
}

std::string describe(const Violation& v) {
  std::string out(to_string(v.code));
  if (v.index) out += "[" + std::to_string(*v.index) + "]";
  if (!v.subject.empty()) out += "(" + v.subject + ")";
  if (!v.detail.empty()) out += ": " + v.detail;
  return out;
}

bool contains_code(const std::vector<Violation>& violations, ViolationCode code) {
  return std::any_of(violations.begin(), violations.end(),
                     [code](const Violation& v) { return v.code == code; });
}

}  // namespace srl
