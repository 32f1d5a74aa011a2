#include "srl/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "srl/rng.hpp"
#include "srl/text.hpp"

namespace srl::dataset {
namespace {

using detail::json;
using detail::ordered_json;

constexpr std::string_view kInstruction =
    "You FIRST observe the image in <observe> </observe> tags, then visualise the relevant scene "
    "graph in <scene> </scene> tags, followed by thinking about the reasoning process as an "
    "internal monologue within <think> </think> tags and then provide the final answer. The "
    "final answer MUST BE put within <answer> </answer> tags, and only return the final choice "
    "including the correct option and answer within the answer tags, e.g., <answer> (C) The red "
    "cube is left of the green sphere </answer>.";

int key_index(char key) {
  for (std::size_t i = 0; i < kOptionKeys.size(); ++i) {
    if (kOptionKeys[i] == key) return static_cast<int>(i);
  }
  return -1;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileUnreadable("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<CorpusRecord> record_from_json(const json& doc, std::string& error) {
  if (!doc.is_object()) {
    error = "record is not a JSON object";
    return std::nullopt;
  }
  auto id = doc.find("image_id");
  auto w = doc.find("width");
  auto h = doc.find("height");
  auto scene = doc.find("scene");
  if (id == doc.end() || !id->is_string() || id->get_ref<const std::string&>().empty()) {
    error = "missing or empty image_id";
    return std::nullopt;
  }
  if (w == doc.end() || h == doc.end() || !w->is_number_integer() || !h->is_number_integer() ||
      w->get<long long>() <= 0 || h->get<long long>() <= 0) {
    error = "width/height must be positive integers";
    return std::nullopt;
  }
  if (scene == doc.end()) {
    error = "missing scene";
    return std::nullopt;
  }
  auto parsed = detail::scene_from_json(*scene, {});
  CorpusRecord record;
  record.image_id = id->get<std::string>();
  record.image_size = ImageSize{w->get<int>(), h->get<int>()};
  std::vector<Violation> violations = parsed.violations;
  if (parsed.graph) {
    record.scene = std::move(*parsed.graph);
    record.scene.image_size = record.image_size;
    violations = validate_graph(record.scene);
  }
  if (!violations.empty()) {
    error = "invalid scene:";
    for (const auto& v : violations) error += " " + describe(v) + ";";
    return std::nullopt;
  }
  return record;
}

// Content tokens of a label, lemmatized; spatial words and stopwords only
// count when the label has nothing else.
std::vector<std::string> label_lemmas(std::string_view label) {
  std::vector<std::string> content;
  auto all = text::lemma_tokens(label);
  for (const auto& t : all) {
    if (!text::is_stopword(t) && !text::is_uninflected(t)) content.push_back(t);
  }
  return content.empty() ? all : content;
}

bool predicate_in_question(std::string_view predicate, const std::set<std::string>& vocab,
                           const std::vector<std::string>& question_tokens) {
  auto tokens = text::tokenize(predicate);
  if (tokens.empty()) return false;
  std::vector<std::string> content;
  for (const auto& t : tokens) {
    if (!text::is_stopword(t)) content.push_back(text::is_uninflected(t) ? t : text::singularize(t));
  }
  if (!content.empty()) {
    return std::all_of(content.begin(), content.end(),
                       [&](const std::string& t) { return vocab.contains(t); });
  }
  // Function-word predicates ("on", "above") must occur verbatim.
  return std::all_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
    return std::find(question_tokens.begin(), question_tokens.end(), t) != question_tokens.end();
  });
}

}  // namespace

std::string_view to_string(Category c) noexcept {
  switch (c) {
    case Category::Relation: return "relation";
    case Category::Size: return "size";
    case Category::Orientation: return "orientation";
    case Category::Distance: return "distance";
    case Category::Depth: return "depth";
    case Category::Reach: return "reach";
    case Category::Location: return "location";
    case Category::Count: return "count";
    case Category::Existence: return "existence";
  }
  return "relation";
}

Category parse_category(std::string_view s) {
  for (auto c : kCategories) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument("unknown category '" + std::string(s) + "'");
}

std::string QASample::answer_text() const {
  return "(" + std::string(1, answer_key) + ") " + correct_option();
}

const std::string& QASample::correct_option() const {
  const int idx = key_index(answer_key);
  if (idx < 0) throw std::invalid_argument("answer_key must be one of A-D");
  return options[static_cast<std::size_t>(idx)];
}

void QASample::validate() const {
  if (key_index(answer_key) < 0) throw std::invalid_argument("answer_key must be one of A-D");
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (options[i].empty()) throw std::invalid_argument("option " + std::string(1, kOptionKeys[i]) + " is empty");
    for (std::size_t j = i + 1; j < options.size(); ++j) {
      if (options[i] == options[j]) throw std::invalid_argument("options must be distinct");
    }
  }
  if (rating < 1 || rating > 10) throw std::invalid_argument("rating must be in 1-10");
  if (auto v = validate_graph(subgraph); !v.empty()) throw InvalidGraph(std::move(v));
}

IngestResult parse_corpus(std::string_view jsonl) {
  IngestResult result;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    auto line = text::trim(jsonl.substr(pos, end - pos));
    pos = end + 1;
    ++lineno;
    if (line.empty()) continue;
    auto doc = json::parse(line.begin(), line.end(), nullptr, false);
    if (doc.is_discarded()) {
      result.errors.push_back({lineno, "invalid JSON"});
      continue;
    }
    std::string error;
    if (auto record = record_from_json(doc, error)) {
      result.records.push_back(std::move(*record));
    } else {
      result.errors.push_back({lineno, error});
    }
  }
  return result;
}

IngestResult ingest_corpus(const std::string& path) { return parse_corpus(read_file(path)); }

std::string record_to_json(const CorpusRecord& record) {
  ordered_json j;
  j["image_id"] = record.image_id;
  j["width"] = record.image_size.width;
  j["height"] = record.image_size.height;
  j["scene"] = detail::scene_to_json(canonicalize(record.scene));
  return j.dump();
}

std::string sample_to_json(const QASample& s) {
  ordered_json j;
  j["image_id"] = s.image_id;
  if (s.image_size) {
    j["width"] = s.image_size->width;
    j["height"] = s.image_size->height;
  }
  j["question"] = s.question;
  ordered_json options;
  for (std::size_t i = 0; i < kOptionKeys.size(); ++i) {
    options[std::string(1, kOptionKeys[i])] = s.options[i];
  }
  j["options"] = std::move(options);
  j["answer_key"] = std::string(1, s.answer_key);
  j["category"] = std::string(to_string(s.category));
  j["rating"] = s.rating;
  j["difficulty"] = s.difficulty;
  j["subgraph"] = detail::scene_to_json(canonicalize(s.subgraph));
  return j.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

QASample sample_from_json(std::string_view line) {
  auto j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("sample is not a JSON object");
  QASample s;
  try {
    s.image_id = j.at("image_id").get<std::string>();
    if (j.contains("width") || j.contains("height")) {
      s.image_size = ImageSize{j.at("width").get<int>(), j.at("height").get<int>()};
    }
    s.question = j.at("question").get<std::string>();
    const auto& options = j.at("options");
    for (std::size_t i = 0; i < kOptionKeys.size(); ++i) {
      s.options[i] = options.at(std::string(1, kOptionKeys[i])).get<std::string>();
    }
    const auto key = j.at("answer_key").get<std::string>();
    if (key.size() != 1) throw std::invalid_argument("answer_key must be a single letter");
    s.answer_key = key[0];
    s.category = parse_category(j.at("category").get<std::string>());
    s.rating = j.at("rating").get<int>();
    s.difficulty = j.value("difficulty", std::string{});
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("sample: ") + e.what());
  }
  if (j.contains("subgraph")) {
    auto parsed = detail::scene_from_json(j["subgraph"], {});
    if (!parsed.graph) throw InvalidGraph(std::move(parsed.violations));
    s.subgraph = std::move(*parsed.graph);
    s.subgraph.image_size = s.image_size;
  }
  s.validate();
  return s;
}

std::vector<QASample> read_dataset(const std::string& path) {
  const auto content = read_file(path);
  std::vector<QASample> samples;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      samples.push_back(sample_from_json(line));
    } catch (const std::exception& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return samples;
}

void write_dataset(const std::string& path, std::span<const QASample> samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileUnreadable("cannot write " + path);
  for (const auto& s : samples) out << sample_to_json(s) << '\n';
}

std::set<std::string> question_vocabulary(std::string_view question) {
  std::set<std::string> vocab;
  for (const auto& token : text::tokenize(question)) {
    if (text::is_stopword(token)) continue;
    const bool numeric = std::all_of(token.begin(), token.end(),
                                     [](unsigned char c) { return std::isdigit(c); });
    if (numeric || text::is_uninflected(token)) {
      vocab.insert(token);
      continue;
    }
    const auto singular = text::singularize(token);
    vocab.insert(singular);
    vocab.insert(text::pluralize(singular));
  }
  return vocab;
}

SceneGraph extract_subgraph(const SceneGraph& scene, std::string_view question) {
  const auto vocab = question_vocabulary(question);
  const auto question_tokens = text::tokenize(question);
  SceneGraph sub;
  sub.image_size = scene.image_size;
  std::set<std::string> kept;
  for (const auto& o : scene.objects) {
    const auto lemmas = label_lemmas(o.label);
    if (std::any_of(lemmas.begin(), lemmas.end(),
                    [&](const std::string& t) { return vocab.contains(t); })) {
      sub.objects.push_back(o);
      kept.insert(o.id);
    }
  }
  for (const auto& r : scene.relations) {
    if (kept.contains(r.subject_id) && kept.contains(r.object_id) &&
        predicate_in_question(r.predicate, vocab, question_tokens)) {
      sub.relations.push_back(r);
    }
  }
  return sub;
}

int difficulty_rank(std::string_view difficulty) noexcept {
  const auto d = text::to_lower(text::trim(difficulty));
  if (d == "hard") return 2;
  if (d == "medium") return 1;
  if (d == "easy") return 0;
  return -1;
}

std::vector<QASample> select_top(std::span<const QASample> samples, std::size_t k) {
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (samples[a].rating != samples[b].rating) return samples[a].rating > samples[b].rating;
    return difficulty_rank(samples[a].difficulty) > difficulty_rank(samples[b].difficulty);
  });
  order.resize(std::min(k, order.size()));
  std::vector<QASample> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(samples[i]);
  return out;
}

std::array<std::size_t, 4> key_histogram(std::span<const QASample> samples) {
  std::array<std::size_t, 4> hist{};
  for (const auto& s : samples) {
    const int idx = key_index(s.answer_key);
    if (idx >= 0) ++hist[static_cast<std::size_t>(idx)];
  }
  return hist;
}

std::vector<QASample> balance_answer_keys(std::span<const QASample> samples, std::uint64_t seed) {
  std::vector<QASample> out(samples.begin(), samples.end());
  const std::size_t n = out.size();
  const auto counts = key_histogram(out);

  // Targets: floor(n/4) each, the remainder going to the currently fullest
  // keys (ties alphabetical) so as few samples as possible move.
  std::array<std::size_t, 4> target;
  target.fill(n / 4);
  std::array<std::size_t, 4> by_count = {0, 1, 2, 3};
  std::stable_sort(by_count.begin(), by_count.end(),
                   [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  for (std::size_t r = 0; r < n % 4; ++r) ++target[by_count[r]];

  // Samples sitting on over-full keys, visited in a seeded order.
  std::array<std::vector<std::size_t>, 4> members;
  for (std::size_t i = 0; i < n; ++i) {
    members[static_cast<std::size_t>(key_index(out[i].answer_key))].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::size_t> movers;
  for (std::size_t k = 0; k < 4; ++k) {
    auto& m = members[k];
    rng.shuffle(std::span<std::size_t>(m));
    for (std::size_t e = target[k]; e < m.size(); ++e) movers.push_back(m[e]);
  }
  std::sort(movers.begin(), movers.end());

  std::array<std::size_t, 4> filled;
  for (std::size_t k = 0; k < 4; ++k) filled[k] = std::min(counts[k], target[k]);
  std::size_t dest = 0;
  for (auto i : movers) {
    while (filled[dest] >= target[dest]) ++dest;
    auto& s = out[i];
    const auto from = static_cast<std::size_t>(key_index(s.answer_key));
    std::swap(s.options[from], s.options[dest]);
    s.answer_key = kOptionKeys[dest];
    ++filled[dest];
  }
  return out;
}

Split split_train_val(std::span<const QASample> samples, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must be in (0, 1)");
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_val = static_cast<std::size_t>(
      std::floor(static_cast<double>(samples.size()) * (1.0 - ratio)));
  const std::size_t n_train = samples.size() - n_val;
  Split split;
  split.train.reserve(n_train);
  split.val.reserve(n_val);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? split.train : split.val).push_back(samples[order[i]]);
  }
  return split;
}

std::string_view prompt_instruction() noexcept { return kInstruction; }

std::string build_prompt(const QASample& sample) {
  if (!sample.image_size) {
    throw MissingImageSize("sample " + sample.image_id + " has no image size");
  }
  std::string prompt(kInstruction);
  prompt += "\n\nImage size: " + std::to_string(sample.image_size->width) + " × " +
            std::to_string(sample.image_size->height) + "\n\n";
  prompt += sample.question;
  for (std::size_t i = 0; i < kOptionKeys.size(); ++i) {
    prompt += "\n(" + std::string(1, kOptionKeys[i]) + ") " + sample.options[i];
  }
  return prompt;
}

}  // namespace srl::dataset
