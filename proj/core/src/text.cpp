#include "srl/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

namespace srl::text {
namespace {

// Classic English stopword list (function words only).
const std::unordered_set<std::string_view>& stopwords() {
  static const std::unordered_set<std::string_view> words = {
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any",
      "are", "as", "at", "be", "because", "been", "before", "being", "below", "between",
      "both", "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during",
      "each", "few", "for", "from", "further", "had", "has", "have", "having", "he", "her",
      "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into",
      "is", "it", "its", "itself", "just", "me", "more", "most", "my", "myself", "no", "nor",
      "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours",
      "ourselves", "out", "over", "own", "same", "she", "should", "so", "some", "such",
      "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there",
      "these", "they", "this", "those", "through", "to", "too", "under", "until", "up",
      "very", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom",
      "why", "will", "with", "would", "you", "your", "yours", "yourself", "yourselves"};
  return words;
}

const std::unordered_set<std::string_view>& uninflected() {
  static const std::unordered_set<std::string_view> words = {
      "left", "right", "behind", "beside", "besides", "near", "nearer", "nearest", "far",
      "farther", "farthest", "further", "next", "front", "back", "top", "bottom", "inside",
      "outside", "beneath", "underneath", "across", "along", "around", "toward", "towards",
      "closer", "closest", "close", "bigger", "biggest", "smaller", "smallest", "taller",
      "tallest", "shorter", "shortest", "larger", "largest", "higher", "highest", "lower",
      "lowest", "wider", "widest", "facing", "away", "upper", "middle", "center", "centre"};
  return words;
}

const std::unordered_map<std::string_view, std::string_view>& irregular_plurals() {
  static const std::unordered_map<std::string_view, std::string_view> table = {
      {"people", "person"}, {"men", "man"},       {"women", "woman"},   {"children", "child"},
      {"feet", "foot"},     {"teeth", "tooth"},   {"mice", "mouse"},    {"geese", "goose"},
      {"oxen", "ox"},       {"knives", "knife"},  {"wives", "wife"},    {"lives", "life"},
      {"leaves", "leaf"},   {"shelves", "shelf"}, {"halves", "half"},   {"loaves", "loaf"},
      {"wolves", "wolf"},   {"calves", "calf"},   {"scarves", "scarf"}, {"thieves", "thief"},
      {"sheep", "sheep"},   {"fish", "fish"},     {"deer", "deer"},     {"glasses", "glass"},
      {"series", "series"}, {"species", "species"}, {"skis", "ski"},    {"tomatoes", "tomato"},
      {"potatoes", "potato"}, {"heroes", "hero"}, {"cacti", "cactus"}, {"dice", "die"}};
  return table;
}

const std::unordered_map<std::string, std::string>& irregular_singulars() {
  static const std::unordered_map<std::string, std::string> table = [] {
    std::unordered_map<std::string, std::string> t;
    for (const auto& [plural, singular] : irregular_plurals()) {
      t.emplace(std::string(singular), std::string(plural));
    }
    return t;
  }();
  return table;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) noexcept {
  constexpr std::string_view ws = " \t\r\n\f\v";
  auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : s) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool is_stopword(std::string_view token) { return stopwords().contains(token); }

bool is_uninflected(std::string_view token) { return uninflected().contains(token); }

std::string singularize(std::string_view word) {
  std::string w = to_lower(word);
  if (auto it = irregular_plurals().find(w); it != irregular_plurals().end()) {
    return std::string(it->second);
  }
  if (irregular_singulars().contains(w) || is_uninflected(w) || w.size() <= 3) return w;
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return w;
  if (ends_with(w, "ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (ends_with(w, "sses") || ends_with(w, "xes") || ends_with(w, "zes") ||
      ends_with(w, "ches") || ends_with(w, "shes")) {
    return w.substr(0, w.size() - 2);
  }
  if (ends_with(w, "s")) return w.substr(0, w.size() - 1);
  return w;
}

std::string pluralize(std::string_view word) {
  std::string w = to_lower(word);
  if (auto it = irregular_singulars().find(w); it != irregular_singulars().end()) return it->second;
  if (irregular_plurals().contains(w)) return w;
  if (ends_with(w, "s") || ends_with(w, "x") || ends_with(w, "z") || ends_with(w, "ch") ||
      ends_with(w, "sh")) {
    return w + "es";
  }
  if (w.size() >= 2 && w.back() == 'y' && !is_vowel(w[w.size() - 2])) {
    return w.substr(0, w.size() - 1) + "ies";
  }
  return w + "s";
}

std::vector<std::string> lemma_tokens(std::string_view s) {
  auto tokens = tokenize(s);
  for (auto& t : tokens) t = singularize(t);
  return tokens;
}

}  // namespace srl::text
