#include "srl/response_parser.hpp"

#include <algorithm>

#include "srl/text.hpp"

namespace srl {
namespace {

std::vector<std::size_t> find_all(std::string_view haystack, std::string_view needle) {
  std::vector<std::size_t> hits;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    hits.push_back(pos);
  }
  return hits;
}

std::string open_tag(std::string_view name) { return "<" + std::string(name) + ">"; }
std::string close_tag(std::string_view name) { return "</" + std::string(name) + ">"; }

struct Located {
  std::string_view name;
  std::size_t canonical_rank;
  std::size_t open;
  std::optional<std::size_t> close;
};

}  // namespace

ResponseParse parse_response(std::string_view raw, const ParseOptions& options) {
  ResponseParse result;
  auto& out = result.violations;
  std::vector<Located> located;

  for (std::size_t rank = 0; rank < kResponseTags.size(); ++rank) {
    const auto name = kResponseTags[rank];
    const auto open = open_tag(name);
    const auto close = close_tag(name);
    auto opens = find_all(raw, open);
    auto closes = find_all(raw, close);
    if (opens.empty()) {
      out.push_back({ViolationCode::MissingTag, rank, std::string(name), {}});
      continue;
    }
    if (opens.size() > 1 || closes.size() > 1) {
      out.push_back({ViolationCode::DuplicateTag, rank, std::string(name),
                     std::to_string(opens.size()) + " open, " + std::to_string(closes.size()) +
                         " close"});
      continue;
    }
    Located loc{name, rank, opens.front(), std::nullopt};
    auto after = raw.find(close, loc.open + open.size());
    if (after == std::string_view::npos) {
      out.push_back({ViolationCode::UnclosedTag, rank, std::string(name), {}});
    } else {
      loc.close = after;
    }
    located.push_back(loc);
  }

  if (!options.lenient_order && located.size() > 1) {
    auto doc_order = located;
    std::sort(doc_order.begin(), doc_order.end(),
              [](const Located& a, const Located& b) { return a.open < b.open; });
    // `located` is already in canonical order; report the first tag that is
    // not where the canonical sequence expects it.
    for (std::size_t k = 0; k < located.size(); ++k) {
      if (doc_order[k].name != located[k].name) {
        out.push_back({ViolationCode::OutOfOrder, located[k].canonical_rank,
                       std::string(located[k].name),
                       "found <" + std::string(doc_order[k].name) + "> first"});
        break;
      }
    }
  }

  for (const auto& loc : located) {
    if (!loc.close) continue;
    const auto payload_begin = loc.open + open_tag(loc.name).size();
    auto payload = raw.substr(payload_begin, *loc.close - payload_begin);
    for (auto inner : kResponseTags) {
      if (payload.find(open_tag(inner)) != std::string_view::npos ||
          payload.find(close_tag(inner)) != std::string_view::npos) {
        out.push_back({ViolationCode::NestedTag, loc.canonical_rank, std::string(loc.name),
                       "contains <" + std::string(inner) + ">"});
        break;
      }
    }
  }

  if (!out.empty()) return result;

  StructuredResponse resp;
  auto doc_order = located;
  std::sort(doc_order.begin(), doc_order.end(),
            [](const Located& a, const Located& b) { return a.open < b.open; });
  for (const auto& loc : doc_order) {
    const auto payload_begin = loc.open + open_tag(loc.name).size();
    std::string payload(raw.substr(payload_begin, *loc.close - payload_begin));
    resp.tag_spans.push_back(
        TagSpan{std::string(loc.name), loc.open, *loc.close + close_tag(loc.name).size()});
    if (loc.name == "observe") resp.observe = std::move(payload);
    else if (loc.name == "scene") resp.scene_raw = std::move(payload);
    else if (loc.name == "think") resp.think = std::move(payload);
    else resp.answer = std::move(payload);
  }
  auto scene = parse_scene_json(resp.scene_raw, options.scene);
  resp.scene = std::move(scene.graph);
  resp.scene_violations = std::move(scene.violations);
  result.response = std::move(resp);
  return result;
}

FormatVerdict format_reward(std::string_view raw, const ValidationOptions& scene_options) {
  FormatVerdict verdict;
  ParseOptions options;
  options.scene = scene_options;
  auto parsed = parse_response(raw, options);
  if (!parsed.ok()) {
    verdict.violations = std::move(parsed.violations);
    return verdict;
  }
  verdict.violations = parsed.response->scene_violations;
  verdict.reward = verdict.violations.empty() && parsed.response->scene ? 1 : 0;
  return verdict;
}

std::string_view to_string(AnswerMode mode) noexcept {
  return mode == AnswerMode::Strict ? "strict" : "letter";
}

AnswerMode parse_answer_mode(std::string_view s) {
  if (s == "strict") return AnswerMode::Strict;
  if (s == "letter") return AnswerMode::Letter;
  throw std::invalid_argument("unknown accuracy mode '" + std::string(s) +
                              "' (expected strict or letter)");
}

std::string extract_answer(std::string_view answer_text, AnswerMode mode) {
  auto trimmed = text::trim(answer_text);
  if (trimmed.empty()) throw AnswerError(AnswerError::Kind::NoAnswerContent, "answer is empty");
  if (mode == AnswerMode::Strict) return std::string(trimmed);

  auto is_option = [](char c) { return c >= 'A' && c <= 'D'; };
  if (trimmed.size() == 1 && is_option(trimmed[0])) return std::string(1, trimmed[0]);
  if (trimmed.size() >= 3 && trimmed[0] == '(' && is_option(trimmed[1]) && trimmed[2] == ')') {
    return std::string(1, trimmed[1]);
  }
  throw AnswerError(AnswerError::Kind::NoOptionLetter,
                    "no (A)-(D) option letter in '" + std::string(trimmed) + "'");
}

std::string extract_answer(const StructuredResponse& response, AnswerMode mode) {
  return extract_answer(response.answer, mode);
}

std::optional<std::string> find_tag_payload(std::string_view raw, std::string_view name) {
  const auto open = open_tag(name);
  auto begin = raw.find(open);
  if (begin == std::string_view::npos) return std::nullopt;
  begin += open.size();
  auto end = raw.find(close_tag(name), begin);
  if (end == std::string_view::npos) return std::nullopt;
  return std::string(raw.substr(begin, end - begin));
}

}  // namespace srl
