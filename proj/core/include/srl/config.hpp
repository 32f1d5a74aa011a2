#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "srl/grpo.hpp"
#include "srl/reward.hpp"

namespace srl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RewardSection {
  RewardWeights weights;
  AnswerMode accuracy_mode = AnswerMode::Strict;
  bool clamp_negative_ciou = true;
  bool strict_vocabulary = false;
  std::string vocabulary_path;  // empty: no vocabulary

  /// Loads the vocabulary file when one is configured.
  ScoringConfig scoring() const;
  friend bool operator==(const RewardSection&, const RewardSection&) = default;
};

struct DatasetSection {
  std::size_t top_k = 10000;
  double split_ratio = 0.9;
  bool select_before_filter = false;
  bool filter_before_split = true;
  /// always-correct | always-wrong | abstain | seeded | exec:<command>
  std::string verifier = "always-correct";
  double verifier_p_correct = 0.8;
  /// template | fixture:<path> | exec:<command>
  std::string generator = "template";
  std::size_t per_record = 4;
  unsigned concurrency = 1;
  friend bool operator==(const DatasetSection&, const DatasetSection&) = default;
};

struct SimulationSection {
  std::size_t episodes = 200;
  std::size_t spam_boxes = 20;
  double focused_jitter = 0.05;
  double wrong_jitter = 0.25;
  double spam_jitter = 0.25;
  std::size_t min_objects = 2;
  std::size_t max_objects = 6;
  double canvas = 1000.0;
  unsigned workers = 1;
  friend bool operator==(const SimulationSection&, const SimulationSection&) = default;
};

struct GradcheckSection {
  std::size_t trajectories = 8;
  std::size_t min_length = 12;
  std::size_t max_length = 24;
  double step = 1e-5;
  double threshold = 1e-4;
  double perturbation = 0.25;
  friend bool operator==(const GradcheckSection&, const GradcheckSection&) = default;
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::string out;
  RewardSection reward;
  grpo::GrpoConfig grpo;
  DatasetSection dataset;
  SimulationSection simulation;
  GradcheckSection gradcheck;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// INI-style text: `[section]` headers, `key = value` lines, `#` or `;`
/// comments. Unknown sections or keys are errors.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Every field, doubles in shortest round-trip form, so that
/// parse_config(to_config_text(c)) == c.
std::string to_config_text(const RunConfig& config);

}  // namespace srl
