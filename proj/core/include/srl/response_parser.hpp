#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "srl/scene_graph.hpp"
#include "srl/violation.hpp"

namespace srl {

/// Required tags, in the order they must appear.
inline constexpr std::array<std::string_view, 4> kResponseTags = {"observe", "scene", "think",
                                                                  "answer"};

struct TagSpan {
  std::string name;
  std::size_t start = 0;  // offset of '<' in the opening tag
  std::size_t end = 0;    // one past '>' of the closing tag
  friend bool operator==(const TagSpan&, const TagSpan&) = default;
};

struct StructuredResponse {
  std::string observe;
  std::string scene_raw;
  std::optional<SceneGraph> scene;
  std::vector<Violation> scene_violations;
  std::string think;
  std::string answer;
  std::vector<TagSpan> tag_spans;
};

struct ParseOptions {
  /// Accept the four tags in any order. Analysis only; scoring is strict.
  bool lenient_order = false;
  ValidationOptions scene;
};

struct ResponseParse {
  std::optional<StructuredResponse> response;
  std::vector<Violation> violations;
  bool ok() const noexcept { return response.has_value(); }
};

/// Extracts the four tagged sections. Tag-level problems (missing, repeated,
/// unclosed, out of order, nested) fail the parse; the scene payload is
/// parsed separately and its result stored on the response.
ResponseParse parse_response(std::string_view raw, const ParseOptions& options = {});

struct FormatVerdict {
  int reward = 0;
  std::vector<Violation> violations;
};

/// 1 iff the tag structure is intact and the scene payload is a valid graph.
FormatVerdict format_reward(std::string_view raw, const ValidationOptions& scene_options = {});

enum class AnswerMode { Strict, Letter };

std::string_view to_string(AnswerMode mode) noexcept;
AnswerMode parse_answer_mode(std::string_view s);

class AnswerError : public std::runtime_error {
 public:
  enum class Kind { NoAnswerContent, NoOptionLetter };
  AnswerError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Strict: the trimmed answer text. Letter: the option letter A-D from a
/// leading "(X)" or a bare "X".
std::string extract_answer(std::string_view answer_text, AnswerMode mode);
std::string extract_answer(const StructuredResponse& response, AnswerMode mode);

/// Tag-agnostic fallback used for diagnostics on malformed responses: the
/// payload between the first `<name>` and the next `</name>`, if any.
std::optional<std::string> find_tag_payload(std::string_view raw, std::string_view name);

}  // namespace srl
