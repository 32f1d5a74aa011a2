#include "srl/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "json_util.hpp"
#include "srl/dataset.hpp"

namespace srl::sim {
namespace {

constexpr std::array<const char*, 12> kLabels = {"cup",  "plate", "lamp",  "chair", "book",  "vase",
                                                 "clock", "bottle", "bowl", "phone", "plant", "laptop"};

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string the(const std::string& label) { return "the " + label; }

std::size_t key_index(char key) { return static_cast<std::size_t>(key - 'A'); }

BBox jitter(const BBox& b, double scale, double canvas, Rng& rng) {
  const double w = b.width();
  const double h = b.height();
  double x1 = b.x1 + scale * w * rng.normal();
  double y1 = b.y1 + scale * h * rng.normal();
  double x2 = b.x2 + scale * w * rng.normal();
  double y2 = b.y2 + scale * h * rng.normal();
  if (x1 > x2) std::swap(x1, x2);
  if (y1 > y2) std::swap(y1, y2);
  x1 = std::clamp(x1, 0.0, canvas - 1.0);
  y1 = std::clamp(y1, 0.0, canvas - 1.0);
  x2 = std::clamp(x2, x1 + 1.0, canvas);
  y2 = std::clamp(y2, y1 + 1.0, canvas);
  return {x1, y1, x2, y2};
}

void set_options(Episode& e, std::array<std::string, 4> options, Rng& rng) {
  // options[0] is the correct one until shuffled.
  std::array<std::size_t, 4> perm = {0, 1, 2, 3};
  rng.shuffle(std::span<std::size_t>(perm));
  for (std::size_t i = 0; i < 4; ++i) {
    e.options[i] = options[perm[i]];
    if (perm[i] == 0) e.answer_key = static_cast<char>('A' + i);
  }
}

std::string respond(const SceneGraph& graph, std::size_t option, const Episode& e,
                    std::string_view think) {
  return "<observe>Objects on a plain background.</observe>\n<scene>" + serialize_scene(graph) +
         "</scene>\n<think>" + std::string(think) + "</think>\n<answer>(" +
         std::string(1, static_cast<char>('A' + option)) + ") " + e.options[option] + "</answer>";
}

}  // namespace

std::string_view to_string(AgentKind kind) noexcept {
  switch (kind) {
    case AgentKind::Focused: return "focused";
    case AgentKind::HonestWrong: return "honest_wrong";
    case AgentKind::BoxSpam: return "box_spam";
    case AgentKind::ExhaustiveGraph: return "exhaustive_graph";
  }
  return "focused";
}

Episode make_episode(Rng& rng, const SimulationSection& config) {
  const double c = config.canvas;
  const auto n = config.min_objects + rng.below(config.max_objects - config.min_objects + 1);
  std::array<std::size_t, kLabels.size()> order;
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));

  Episode e;
  e.scene.image_size = ImageSize{static_cast<int>(c), static_cast<int>(c)};
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::round(rng.uniform(0.05, 0.3) * c);
    const double h = std::round(rng.uniform(0.05, 0.3) * c);
    const double x1 = std::round(rng.uniform(0.0, c - w));
    const double y1 = std::round(rng.uniform(0.0, c - h));
    e.scene.objects.push_back(
        {"o" + std::to_string(i + 1), kLabels[order[i % kLabels.size()]], {x1, y1, x1 + w, y1 + h}});
  }
  const auto& objs = e.scene.objects;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = objs[i].bbox.center_x() - objs[j].bbox.center_x();
      const double dy = objs[i].bbox.center_y() - objs[j].bbox.center_y();
      if (std::fabs(dx) >= std::fabs(dy)) {
        const bool i_left = dx < 0;
        e.scene.relations.push_back(
            {i_left ? objs[i].id : objs[j].id, "left of", i_left ? objs[j].id : objs[i].id});
      } else {
        const bool i_up = dy < 0;
        e.scene.relations.push_back(
            {i_up ? objs[i].id : objs[j].id, "above", i_up ? objs[j].id : objs[i].id});
      }
    }
  }

  // Three-object question when the scene allows one, otherwise a pairwise one.
  bool asked = false;
  if (n >= 3) {
    const auto& b = objs[rng.below(n)];
    std::vector<const ObjectNode*> left, right;
    for (const auto& o : objs) {
      if (&o == &b) continue;
      (o.bbox.center_x() < b.bbox.center_x() ? left : right).push_back(&o);
    }
    if (!left.empty() && !right.empty()) {
      const auto* a = left[rng.below(left.size())];
      const auto* other = right[rng.below(right.size())];
      if (rng.bernoulli(0.5)) {
        e.question = "Which object is left of " + the(b.label) + ": " + the(a->label) + " or " +
                     the(other->label) + "?";
      } else {
        e.question = "Which object is left of " + the(b.label) + ": " + the(other->label) +
                     " or " + the(a->label) + "?";
      }
      set_options(e, {"The " + a->label, "The " + other->label, "Both of them", "Neither of them"},
                  rng);
      asked = true;
    }
  }
  if (!asked) {
    const auto i = rng.below(n);
    auto j = rng.below(n - 1);
    if (j >= i) ++j;
    const auto& a = objs[i];
    const auto& b = objs[j];
    const double dx = a.bbox.center_x() - b.bbox.center_x();
    const double dy = a.bbox.center_y() - b.bbox.center_y();
    std::string truth = std::fabs(dx) >= std::fabs(dy) ? (dx < 0 ? "left of" : "right of")
                                                       : (dy < 0 ? "above" : "below");
    std::array<std::string, 4> rel = {"left of", "right of", "above", "below"};
    std::stable_partition(rel.begin(), rel.end(), [&](const std::string& r) { return r == truth; });
    std::array<std::string, 4> options;
    for (std::size_t k = 0; k < 4; ++k) options[k] = "The " + a.label + " is " + rel[k] + " " + the(b.label);
    e.question = "Is " + the(a.label) + " left of, right of, above or below " + the(b.label) + "?";
    set_options(e, options, rng);
  }

  e.truth.subgraph = dataset::extract_subgraph(e.scene, e.question);
  e.truth.answer = "(" + std::string(1, e.answer_key) + ") " + e.options[key_index(e.answer_key)];
  return e;
}

std::string agent_response(AgentKind kind, const Episode& e, Rng& rng,
                           const SimulationSection& config) {
  const auto& gt = e.truth.subgraph;
  const std::size_t right = key_index(e.answer_key);
  auto wrong = [&] {
    auto k = rng.below(3);
    return k >= right ? k + 1 : k;
  };
  auto jittered_copy = [&](double scale) {
    SceneGraph g;
    for (const auto& o : gt.objects) g.objects.push_back({o.id, o.label, jitter(o.bbox, scale, config.canvas, rng)});
    g.relations = gt.relations;
    return g;
  };

  switch (kind) {
    case AgentKind::Focused:
      return respond(jittered_copy(config.focused_jitter), right, e,
                     "Comparing the centres of the named objects gives the answer.");
    case AgentKind::HonestWrong:
      return respond(jittered_copy(config.wrong_jitter), wrong(), e,
                     "The positions look reversed to me.");
    case AgentKind::BoxSpam: {
      SceneGraph g;
      const std::size_t m = config.spam_boxes;
      for (std::size_t i = 0; i < m; ++i) {
        const auto& src = gt.objects.empty() ? e.scene.objects[i % e.scene.objects.size()]
                                             : gt.objects[i % gt.objects.size()];
        g.objects.push_back({"s" + std::to_string(i + 1), src.label,
                             jitter(src.bbox, config.spam_jitter, config.canvas, rng)});
      }
      for (std::size_t i = 0; i + 1 < m; ++i) {
        g.relations.push_back({g.objects[i].id, "near", g.objects[i + 1].id});
      }
      return respond(g, rng.below(4), e, "Listing every box that could matter.");
    }
    case AgentKind::ExhaustiveGraph:
      return respond(e.scene, right, e, "Every object in the scene and how they relate.");
  }
  throw std::logic_error("unknown agent kind");
}

const AgentSummary& SimulationResult::of(AgentKind kind) const {
  return summary[static_cast<std::size_t>(kind)];
}

bool SimulationResult::spam_spatial_exceeds_wrong() const {
  return of(AgentKind::BoxSpam).mean_ungated_spatial > of(AgentKind::HonestWrong).mean_ungated_spatial;
}

bool SimulationResult::spam_total_below_focused() const {
  return of(AgentKind::BoxSpam).mean_total < of(AgentKind::Focused).mean_total;
}

SimulationResult simulate_hacking(const SimulationSection& config, std::uint64_t seed,
                                  const ScoringConfig& scoring) {
  const std::size_t n_agents = kAgents.size();
  SimulationResult result;
  result.episodes.resize(config.episodes * n_agents);

  auto run = [&](std::size_t ep) {
    Rng episode_rng(Rng::derive(seed, ep));
    const auto episode = make_episode(episode_rng, config);
    for (std::size_t a = 0; a < n_agents; ++a) {
      Rng agent_rng(Rng::derive(Rng::derive(seed, ep), a + 1));
      const auto response = agent_response(kAgents[a], episode, agent_rng, config);
      const auto b = total_reward(response, episode.truth, scoring);
      auto& m = result.episodes[ep * n_agents + a];
      m.episode = ep;
      m.agent = kAgents[a];
      m.r_format = b.r_format;
      m.r_count = b.r_count;
      m.r_accuracy = b.r_accuracy;
      m.ungated_spatial = b.r_spatial;
      m.spatial_applied = b.gated_spatial_applied;
      m.total = b.total;
      m.response_length = response.size();
    }
  };

  const unsigned workers = std::max(1u, config.workers);
  if (workers == 1) {
    for (std::size_t ep = 0; ep < config.episodes; ++ep) run(ep);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t ep = w; ep < config.episodes; ep += workers) run(ep);
      });
    }
  }

  // Sums in episode order regardless of how the work was spread.
  for (const auto& m : result.episodes) {
    auto& s = result.summary[static_cast<std::size_t>(m.agent)];
    s.mean_ungated_spatial += m.ungated_spatial;
    s.mean_total += m.total;
    s.mean_count += m.r_count;
    s.mean_accuracy += m.r_accuracy;
  }
  if (config.episodes > 0) {
    const auto n = static_cast<double>(config.episodes);
    for (auto& s : result.summary) {
      s.mean_ungated_spatial /= n;
      s.mean_total /= n;
      s.mean_count /= n;
      s.mean_accuracy /= n;
    }
  }
  return result;
}

std::string metrics_csv(const SimulationResult& result) {
  std::string out =
      "episode,agent,r_format,r_count,r_accuracy,ungated_spatial,spatial_applied,total,"
      "response_length\n";
  for (const auto& m : result.episodes) {
    out += std::to_string(m.episode) + "," + std::string(to_string(m.agent)) + "," +
           std::to_string(m.r_format) + "," + fmt(m.r_count) + "," + std::to_string(m.r_accuracy) +
           "," + fmt(m.ungated_spatial) + "," + (m.spatial_applied ? "1" : "0") + "," +
           fmt(m.total) + "," + std::to_string(m.response_length) + "\n";
  }
  return out;
}

std::string summary_json(const SimulationResult& result, std::uint64_t seed) {
  detail::ordered_json j;
  j["seed"] = seed;
  j["episodes"] = result.episodes.size() / kAgents.size();
  detail::ordered_json agents;
  for (auto kind : kAgents) {
    const auto& s = result.of(kind);
    agents[std::string(to_string(kind))] = {{"mean_ungated_spatial", s.mean_ungated_spatial},
                                            {"mean_total", s.mean_total},
                                            {"mean_count", s.mean_count},
                                            {"mean_accuracy", s.mean_accuracy}};
  }
  j["agents"] = std::move(agents);
  j["spam_spatial_exceeds_wrong"] = result.spam_spatial_exceeds_wrong();
  j["spam_total_below_focused"] = result.spam_total_below_focused();
  return j.dump(2);
}

}  // namespace srl::sim
