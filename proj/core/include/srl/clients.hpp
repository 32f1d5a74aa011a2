#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "srl/dataset.hpp"

namespace srl::dataset {

/// What an external verifier sees: no label, no subgraph.
struct VerifierRequest {
  std::string image_id;
  std::string question;
  std::array<std::string, 4> options;
};

/// An option key, or nullopt for an abstain.
using VerifierAnswer = std::optional<char>;

class VerifierUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Answers multiple-choice questions about an image. May be
/// nondeterministic; implementations used with concurrent filtering must be
/// thread-safe.
class VerifierClient {
 public:
  virtual ~VerifierClient() = default;
  /// Throws VerifierUnavailable when the backend cannot be reached.
  virtual VerifierAnswer answer(const VerifierRequest& request) = 0;
};

/// Deterministic in-process verifier for tests and offline runs. It is
/// given the reference labels up front, keyed by (image_id, question).
class StubVerifier : public VerifierClient {
 public:
  enum class Mode {
    AlwaysCorrect,
    AlwaysWrong,
    Abstain,
    Scripted,  // per-sample outcome sequence, see `script`
    Seeded,    // correct with probability `p_correct`, hashed per call
  };
  enum class Outcome { Right, Wrong, Abstain };

  StubVerifier(Mode mode, std::map<std::pair<std::string, std::string>, char> labels);

  static StubVerifier for_samples(Mode mode, std::span<const QASample> samples);

  /// Registers further labels; a later label for the same key wins.
  void add_labels(std::span<const QASample> samples);

  void set_script(std::vector<Outcome> script) { script_ = std::move(script); }
  void set_seeded(std::uint64_t seed, double p_correct) {
    seed_ = seed;
    p_correct_ = p_correct;
  }
  /// Calls after this many succeed throw VerifierUnavailable.
  void fail_after(std::size_t calls) { fail_after_ = calls; }

  VerifierAnswer answer(const VerifierRequest& request) override;

  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  Mode mode_;
  std::map<std::pair<std::string, std::string>, char> labels_;
  std::vector<Outcome> script_;
  std::uint64_t seed_ = 0;
  double p_correct_ = 1.0;
  std::optional<std::size_t> fail_after_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex per_sample_mutex_;
  std::map<std::pair<std::string, std::string>, std::size_t> per_sample_calls_;
};

/// Runs an external command per request: request JSON on its stdin,
/// `{"answer":"C"}` or `{"abstain":true}` expected on its stdout. A non-zero
/// exit or unreadable reply raises VerifierUnavailable.
class ExecVerifier : public VerifierClient {
 public:
  explicit ExecVerifier(std::string command) : command_(std::move(command)) {}
  VerifierAnswer answer(const VerifierRequest& request) override;

 private:
  std::string command_;
};

/// Produces candidate QA samples from a corpus record. Subgraphs are filled
/// in by the pipeline, so generators may leave them empty.
class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  virtual std::vector<QASample> generate(const CorpusRecord& record) = 0;
};

/// Deterministic geometric templates (relation, size, distance, location,
/// count, existence). Answers are computed from the boxes, so they are
/// exact by construction; ratings and difficulty are hashed from the seed.
class TemplateGenerator : public GeneratorClient {
 public:
  explicit TemplateGenerator(std::uint64_t seed, std::size_t per_record = 4)
      : seed_(seed), per_record_(per_record) {}
  std::vector<QASample> generate(const CorpusRecord& record) override;

 private:
  std::uint64_t seed_;
  std::size_t per_record_;
};

/// Replays pre-generated samples from a dataset-format JSONL file, grouped
/// by image_id.
class FixtureGenerator : public GeneratorClient {
 public:
  explicit FixtureGenerator(const std::string& path);
  explicit FixtureGenerator(std::vector<QASample> samples);
  std::vector<QASample> generate(const CorpusRecord& record) override;

 private:
  std::map<std::string, std::vector<QASample>> by_image_;
};

/// Runs an external command with the corpus record JSON on stdin; expects
/// dataset-format JSONL on stdout.
class ExecGenerator : public GeneratorClient {
 public:
  explicit ExecGenerator(std::string command) : command_(std::move(command)) {}
  std::vector<QASample> generate(const CorpusRecord& record) override;

 private:
  std::string command_;
};

}  // namespace srl::dataset
