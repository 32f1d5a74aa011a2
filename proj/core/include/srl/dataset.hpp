#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "srl/scene_graph.hpp"

namespace srl::dataset {

enum class Category {
  Relation,
  Size,
  Orientation,
  Distance,
  Depth,
  Reach,
  Location,
  Count,
  Existence,
};

inline constexpr std::array<Category, 9> kCategories = {
    Category::Relation, Category::Size,     Category::Orientation,
    Category::Distance, Category::Depth,    Category::Reach,
    Category::Location, Category::Count,    Category::Existence};

inline constexpr std::array<char, 4> kOptionKeys = {'A', 'B', 'C', 'D'};

std::string_view to_string(Category c) noexcept;
Category parse_category(std::string_view s);

/// One multiple-choice VQA item with its question-aligned subgraph.
struct QASample {
  std::string image_id;
  std::optional<ImageSize> image_size;
  std::string question;
  std::array<std::string, 4> options;  // keyed A-D
  char answer_key = 'A';
  Category category = Category::Relation;
  int rating = 1;  // 1-10
  std::string difficulty;
  SceneGraph subgraph;

  /// "(C) <option text>", the form a strict-mode answer is compared against.
  std::string answer_text() const;
  const std::string& correct_option() const;

  /// Throws std::invalid_argument on a key outside A-D, repeated options,
  /// a rating outside 1-10, or an invalid subgraph.
  void validate() const;

  friend bool operator==(const QASample&, const QASample&) = default;
};

struct CorpusRecord {
  std::string image_id;
  ImageSize image_size;
  SceneGraph scene;
};

class FileUnreadable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RecordError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct IngestResult {
  std::vector<CorpusRecord> records;
  std::vector<RecordError> errors;
};

/// Reads corpus JSONL, one `{"image_id","width","height","scene"}` per
/// line. Malformed records go to `errors`, never silently dropped.
IngestResult ingest_corpus(const std::string& path);
IngestResult parse_corpus(std::string_view jsonl);

std::string record_to_json(const CorpusRecord& record);

std::string sample_to_json(const QASample& sample);
QASample sample_from_json(std::string_view line);
std::vector<QASample> read_dataset(const std::string& path);
void write_dataset(const std::string& path, std::span<const QASample> samples);

/// Lowercase content words of the question (stopwords dropped), each
/// expanded to its singular and plural forms.
std::set<std::string> question_vocabulary(std::string_view question);

/// Keeps objects whose label lemmas meet the question vocabulary, and
/// relations whose endpoints were both kept and whose predicate words all
/// occur in the question.
SceneGraph extract_subgraph(const SceneGraph& scene, std::string_view question);

/// Top-k by rating (descending), then difficulty (hard before easy), then
/// input order.
std::vector<QASample> select_top(std::span<const QASample> samples, std::size_t k);

int difficulty_rank(std::string_view difficulty) noexcept;

/// Re-keys samples so the A-D counts differ by at most one. Moves are made
/// only out of over-full keys, by swapping the correct option with the
/// option at the destination key; input that is already balanced is left
/// untouched.
std::vector<QASample> balance_answer_keys(std::span<const QASample> samples, std::uint64_t seed);

std::array<std::size_t, 4> key_histogram(std::span<const QASample> samples);

struct Split {
  std::vector<QASample> train;
  std::vector<QASample> val;
};

/// Seeded shuffle, then val = floor(n * (1 - ratio)) and train gets the rest.
Split split_train_val(std::span<const QASample> samples, double ratio, std::uint64_t seed);

class MissingImageSize : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Instruction template with the image size filled in, then the question and
/// the lettered options.
std::string build_prompt(const QASample& sample);

/// The instruction text preceding the image-size line.
std::string_view prompt_instruction() noexcept;

}  // namespace srl::dataset
