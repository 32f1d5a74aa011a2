#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace srl::text {

/// Lowercased ASCII alphanumeric runs; everything else separates tokens.
std::vector<std::string> tokenize(std::string_view s);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s) noexcept;

bool is_stopword(std::string_view token);

/// Rule-based noun singularization: a small irregular table, then the
/// -ies / -es / -s suffix rules. Words that are not plural come back as is.
std::string singularize(std::string_view word);
std::string pluralize(std::string_view word);

/// Singular lemma of every token in `s` (no stopword removal).
std::vector<std::string> lemma_tokens(std::string_view s);

/// Words that are content-bearing but never inflected for number (spatial
/// terms like "left" or "behind"); they enter a question vocabulary as-is.
bool is_uninflected(std::string_view token);

}  // namespace srl::text
