#include "srl/clients.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "json_util.hpp"
#include "srl/rng.hpp"
#include "srl/text.hpp"

namespace srl::dataset {
namespace {

using detail::json;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

char wrong_key(char right) {
  for (char k : kOptionKeys) {
    if (k != right) return k;
  }
  return 'A';
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

struct ExecResult {
  int status = -1;
  std::string output;
};

// Runs `command` with `input` on its stdin and collects stdout.
ExecResult run_command(const std::string& command, const std::string& input) {
  namespace fs = std::filesystem;
  static std::atomic<unsigned> counter{0};
  const auto path = fs::temp_directory_path() /
                    ("srl-req-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw VerifierUnavailable("cannot write request file " + path.string());
    out << input;
  }
  const std::string full = command + " < " + shell_quote(path.string());
  ExecResult result;
  FILE* pipe = ::popen(full.c_str(), "r");
  if (pipe == nullptr) {
    fs::remove(path);
    throw VerifierUnavailable("cannot start '" + command + "'");
  }
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) result.output.append(buf, n);
  result.status = ::pclose(pipe);
  std::error_code ec;
  fs::remove(path, ec);
  return result;
}

struct Placed {
  const ObjectNode* node;
  double cx, cy, area;
};

std::string article(const std::string& label) { return "the " + label; }

}  // namespace

StubVerifier::StubVerifier(Mode mode, std::map<std::pair<std::string, std::string>, char> labels)
    : mode_(mode), labels_(std::move(labels)) {}

StubVerifier StubVerifier::for_samples(Mode mode, std::span<const QASample> samples) {
  std::map<std::pair<std::string, std::string>, char> labels;
  for (const auto& s : samples) labels[{s.image_id, s.question}] = s.answer_key;
  return StubVerifier(mode, std::move(labels));
}

void StubVerifier::add_labels(std::span<const QASample> samples) {
  std::lock_guard lock(per_sample_mutex_);
  for (const auto& s : samples) labels_[{s.image_id, s.question}] = s.answer_key;
}

VerifierAnswer StubVerifier::answer(const VerifierRequest& request) {
  const std::size_t call = calls_++;
  if (fail_after_ && call >= *fail_after_) {
    throw VerifierUnavailable("stub verifier unavailable after " + std::to_string(*fail_after_) +
                              " calls");
  }
  const std::pair key{request.image_id, request.question};
  char right;
  std::size_t nth;
  {
    std::lock_guard lock(per_sample_mutex_);
    auto it = labels_.find(key);
    if (it == labels_.end()) return std::nullopt;
    right = it->second;
    nth = per_sample_calls_[key]++;
  }
  switch (mode_) {
    case Mode::AlwaysCorrect: return right;
    case Mode::AlwaysWrong: return wrong_key(right);
    case Mode::Abstain: return std::nullopt;
    case Mode::Scripted: {
      const auto outcome = nth < script_.size() ? script_[nth] : Outcome::Wrong;
      if (outcome == Outcome::Right) return right;
      if (outcome == Outcome::Wrong) return wrong_key(right);
      return std::nullopt;
    }
    case Mode::Seeded: {
      auto h = fnv1a(request.question, fnv1a(request.image_id, seed_));
      Rng rng(Rng::derive(h, nth));
      return rng.uniform() < p_correct_ ? right : wrong_key(right);
    }
  }
  return std::nullopt;
}

VerifierAnswer ExecVerifier::answer(const VerifierRequest& request) {
  json req;
  req["image_id"] = request.image_id;
  req["question"] = request.question;
  json options = json::object();
  for (std::size_t i = 0; i < kOptionKeys.size(); ++i) {
    options[std::string(1, kOptionKeys[i])] = request.options[i];
  }
  req["options"] = std::move(options);
  const auto result = run_command(command_, req.dump());
  if (result.status != 0) {
    throw VerifierUnavailable("verifier command exited with status " + std::to_string(result.status));
  }
  auto reply = json::parse(result.output, nullptr, false);
  if (reply.is_discarded() || !reply.is_object()) {
    throw VerifierUnavailable("verifier reply is not a JSON object");
  }
  if (reply.value("abstain", false)) return std::nullopt;
  auto it = reply.find("answer");
  if (it == reply.end() || !it->is_string()) throw VerifierUnavailable("verifier reply has no answer");
  const auto& a = it->get_ref<const std::string&>();
  if (a.size() != 1 || std::find(kOptionKeys.begin(), kOptionKeys.end(), a[0]) == kOptionKeys.end()) {
    throw VerifierUnavailable("verifier answer '" + a + "' is not one of A-D");
  }
  return a[0];
}

std::vector<QASample> TemplateGenerator::generate(const CorpusRecord& record) {
  // Only objects whose label is unique in the scene can be named unambiguously.
  std::map<std::string, int> label_count;
  for (const auto& o : record.scene.objects) ++label_count[o.label];
  std::vector<Placed> named;
  for (const auto& o : record.scene.objects) {
    if (label_count[o.label] == 1) {
      named.push_back({&o, o.bbox.center_x(), o.bbox.center_y(), o.bbox.area()});
    }
  }

  Rng rng(Rng::derive(seed_, fnv1a(record.image_id)));
  std::vector<QASample> candidates;
  auto emit = [&](Category cat, std::string question, std::array<std::string, 4> options) {
    QASample s;
    s.image_id = record.image_id;
    s.image_size = record.image_size;
    s.question = std::move(question);
    s.category = cat;
    // options[0] is the correct one until shuffled.
    std::array<std::size_t, 4> perm = {0, 1, 2, 3};
    rng.shuffle(std::span<std::size_t>(perm));
    for (std::size_t i = 0; i < 4; ++i) {
      s.options[i] = options[perm[i]];
      if (perm[i] == 0) s.answer_key = kOptionKeys[i];
    }
    s.rating = 1 + static_cast<int>(rng.below(10));
    static constexpr std::array<const char*, 3> kDifficulty = {"easy", "medium", "hard"};
    s.difficulty = kDifficulty[rng.below(3)];
    candidates.push_back(std::move(s));
  };

  for (std::size_t i = 0; i + 1 < named.size(); ++i) {
    const auto& a = named[i];
    const auto& b = named[i + 1];
    const auto la = a.node->label;
    const auto lb = b.node->label;
    const double dx = a.cx - b.cx;
    const double dy = a.cy - b.cy;
    std::string horiz = dx < 0 ? "left of" : "right of";
    std::string vert = dy < 0 ? "above" : "below";
    const std::string& truth = std::fabs(dx) >= std::fabs(dy) ? horiz : vert;
    std::array<std::string, 4> rel = {"left of", "right of", "above", "below"};
    std::stable_partition(rel.begin(), rel.end(), [&](const std::string& r) { return r == truth; });
    std::array<std::string, 4> options;
    for (std::size_t k = 0; k < 4; ++k) {
      options[k] = "The " + la + " is " + rel[k] + " " + article(lb);
    }
    emit(Category::Relation,
         "Is " + article(la) + " left of, right of, above or below " + article(lb) + "?", options);

    if (a.area != b.area) {
      const auto& big = a.area > b.area ? la : lb;
      const auto& small = a.area > b.area ? lb : la;
      emit(Category::Size, "Which is larger, " + article(la) + " or " + article(lb) + "?",
           {"The " + big, "The " + small, "They are the same size", "Neither is visible"});
    }
  }

  if (named.size() >= 4) {
    const auto& anchor = named[0];
    std::vector<const Placed*> others;
    for (std::size_t i = 1; i < named.size(); ++i) others.push_back(&named[i]);
    std::stable_sort(others.begin(), others.end(), [&](const Placed* p, const Placed* q) {
      return std::hypot(p->cx - anchor.cx, p->cy - anchor.cy) <
             std::hypot(q->cx - anchor.cx, q->cy - anchor.cy);
    });
    const double d0 = std::hypot(others[0]->cx - anchor.cx, others[0]->cy - anchor.cy);
    const double d1 = std::hypot(others[1]->cx - anchor.cx, others[1]->cy - anchor.cy);
    if (d0 < d1) {
      emit(Category::Distance, "Which object is closest to " + article(anchor.node->label) + "?",
           {"The " + others[0]->node->label, "The " + others[1]->node->label,
            "The " + others[2]->node->label, "None of them"});
    }
  }

  const double half_w = record.image_size.width / 2.0;
  const double half_h = record.image_size.height / 2.0;
  for (const auto& p : named) {
    const std::string v = p.cy < half_h ? "top" : "bottom";
    const std::string h = p.cx < half_w ? "left" : "right";
    std::array<std::string, 4> quads = {"top-left", "top-right", "bottom-left", "bottom-right"};
    const auto truth = v + "-" + h;
    std::stable_partition(quads.begin(), quads.end(),
                          [&](const std::string& q) { return q == truth; });
    std::array<std::string, 4> options;
    for (std::size_t k = 0; k < 4; ++k) options[k] = "The " + quads[k] + " quadrant";
    emit(Category::Location,
         "In which quadrant of the image is " + article(p.node->label) + "?", options);
  }

  for (const auto& [label, count] : label_count) {
    if (count < 2) continue;
    emit(Category::Count, "How many " + text::pluralize(label) + " are in the image?",
         {std::to_string(count), std::to_string(count + 1), std::to_string(count - 1),
          std::to_string(count + 2)});
  }

  for (const auto& p : named) {
    emit(Category::Existence, "Is there " + article(p.node->label) + " in the image?",
         {"Yes", "No", "Only a reflection of it", "Only its shadow"});
    break;
  }

  // Pick per_record candidates with distinct questions, spread over templates.
  std::vector<QASample> out;
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  std::set<std::string> seen;
  for (auto i : order) {
    if (out.size() >= per_record_) break;
    if (!seen.insert(candidates[i].question).second) continue;
    out.push_back(std::move(candidates[i]));
  }
  return out;
}

FixtureGenerator::FixtureGenerator(const std::string& path)
    : FixtureGenerator(read_dataset(path)) {}

FixtureGenerator::FixtureGenerator(std::vector<QASample> samples) {
  for (auto& s : samples) by_image_[s.image_id].push_back(std::move(s));
}

std::vector<QASample> FixtureGenerator::generate(const CorpusRecord& record) {
  auto it = by_image_.find(record.image_id);
  if (it == by_image_.end()) return {};
  auto out = it->second;
  for (auto& s : out) {
    if (!s.image_size) s.image_size = record.image_size;
  }
  return out;
}

std::vector<QASample> ExecGenerator::generate(const CorpusRecord& record) {
  const auto result = run_command(command_, record_to_json(record));
  if (result.status != 0) {
    throw std::runtime_error("generator command exited with status " + std::to_string(result.status));
  }
  std::vector<QASample> out;
  std::istringstream in(result.output);
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto s = sample_from_json(line);
    if (!s.image_size) s.image_size = record.image_size;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace srl::dataset
