#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "srl/config.hpp"
#include "srl/reward.hpp"
#include "srl/rng.hpp"

namespace srl::sim {

enum class AgentKind {
  Focused,          // right answer, tight boxes, exactly the relevant objects
  HonestWrong,      // wrong answer, loose boxes, exactly the relevant objects
  BoxSpam,          // many jittered boxes cycling the relevant labels, random answer
  ExhaustiveGraph,  // right answer, the whole scene as its graph
};

inline constexpr std::array<AgentKind, 4> kAgents = {AgentKind::Focused, AgentKind::HonestWrong,
                                                     AgentKind::BoxSpam,
                                                     AgentKind::ExhaustiveGraph};

std::string_view to_string(AgentKind kind) noexcept;

/// Seeds checked alongside the default one.
inline constexpr std::array<std::uint64_t, 10> kDocumentedSeeds = {42, 1, 2, 3, 4, 5, 6, 7, 8, 9};

struct Episode {
  SceneGraph scene;
  std::string question;
  std::array<std::string, 4> options;
  char answer_key = 'A';
  GroundTruth truth;
};

/// Random scene plus one templated spatial question with a geometrically
/// computed answer.
Episode make_episode(Rng& rng, const SimulationSection& config);

std::string agent_response(AgentKind kind, const Episode& episode, Rng& rng,
                           const SimulationSection& config);

struct EpisodeMetrics {
  std::size_t episode = 0;
  AgentKind agent = AgentKind::Focused;
  int r_format = 0;
  double r_count = 0.0;
  int r_accuracy = 0;
  /// Matched-pair CIoU mean over whatever the response's scene contains,
  /// with no count term and no gating.
  double ungated_spatial = 0.0;
  bool spatial_applied = false;
  double total = 0.0;
  std::size_t response_length = 0;  // bytes
};

struct AgentSummary {
  double mean_ungated_spatial = 0.0;
  double mean_total = 0.0;
  double mean_count = 0.0;
  double mean_accuracy = 0.0;
};

struct SimulationResult {
  std::vector<EpisodeMetrics> episodes;  // episode-major, agents in kAgents order
  std::array<AgentSummary, 4> summary;

  const AgentSummary& of(AgentKind kind) const;
  /// box_spam's ungated spatial mean strictly above honest_wrong's.
  bool spam_spatial_exceeds_wrong() const;
  /// box_spam's gated total mean strictly below focused's.
  bool spam_total_below_focused() const;
};

SimulationResult simulate_hacking(const SimulationSection& config, std::uint64_t seed,
                                  const ScoringConfig& scoring = {});

std::string metrics_csv(const SimulationResult& result);
std::string summary_json(const SimulationResult& result, std::uint64_t seed);

}  // namespace srl::sim
