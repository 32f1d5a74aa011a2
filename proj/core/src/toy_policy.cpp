#include "srl/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srl::toy {
namespace {

constexpr std::array<double, 4> kBoxShift = {0.0, 0.1, 0.3, 0.6};
constexpr std::array<const char*, 3> kFiller = {"so", "hmm", "then"};

}  // namespace

ToyPolicy::ToyPolicy(std::vector<double> theta, std::vector<Logits> step_bias)
    : theta_(std::move(theta)), bias_(std::move(step_bias)) {
  if (theta_.size() != kVocab) throw std::invalid_argument("toy policy needs 16 parameters");
  if (bias_.empty()) throw std::invalid_argument("toy policy needs at least one step");
}

ToyPolicy ToyPolicy::random(std::uint64_t seed, std::size_t max_length, double bias_scale) {
  Rng rng(seed);
  std::vector<Logits> bias(max_length);
  for (auto& step : bias) {
    for (auto& b : step) b = bias_scale * rng.normal();
  }
  return ToyPolicy(std::vector<double>(kVocab, 0.0), std::move(bias));
}

ToyPolicy ToyPolicy::with_theta(std::vector<double> theta) const {
  return ToyPolicy(std::move(theta), bias_);
}

Logits ToyPolicy::log_probabilities(std::size_t step) const {
  const auto& bias = bias_.at(step);
  Logits z;
  for (std::size_t k = 0; k < kVocab; ++k) z[k] = theta_[k] + bias[k];
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double lse = m + std::log(s);
  for (auto& v : z) v -= lse;
  return z;
}

Logits ToyPolicy::probabilities(std::size_t step) const {
  auto p = log_probabilities(step);
  for (auto& v : p) v = std::exp(v);
  return p;
}

std::vector<int> ToyPolicy::sample(Rng& rng, std::size_t length) const {
  if (length > bias_.size()) throw std::invalid_argument("trajectory longer than the policy");
  std::vector<int> tokens(length);
  for (std::size_t t = 0; t < length; ++t) {
    const auto p = probabilities(t);
    double u = rng.uniform();
    int pick = kVocab - 1;
    for (std::size_t k = 0; k < kVocab; ++k) {
      if (u < p[k]) {
        pick = static_cast<int>(k);
        break;
      }
      u -= p[k];
    }
    tokens[t] = pick;
  }
  return tokens;
}

std::vector<double> ToyPolicy::token_logprobs(std::span<const int> tokens) const {
  std::vector<double> out(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    out[t] = log_probabilities(t)[static_cast<std::size_t>(tokens[t])];
  }
  return out;
}

std::vector<double> ToyPolicy::weighted_logprob_grad(std::span<const int> tokens,
                                                     std::span<const double> weights) const {
  std::vector<double> g(kVocab, 0.0);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto p = probabilities(t);
    for (std::size_t k = 0; k < kVocab; ++k) {
      const double indicator = static_cast<std::size_t>(tokens[t]) == k ? 1.0 : 0.0;
      g[k] += weights[t] * (indicator - p[k]);
    }
  }
  return g;
}

ToyTask default_task() {
  ToyTask task;
  task.options = {"The cup is right of the plate", "The cup is left of the plate",
                  "The cup is above the plate", "The cup is below the plate"};
  auto& g = task.truth.subgraph;
  g.image_size = ImageSize{800, 600};
  g.objects = {{"cup", "cup", {100, 100, 200, 200}},
               {"plate", "plate", {300, 120, 420, 220}},
               {"lamp", "lamp", {600, 50, 700, 300}}};
  g.relations = {{"cup", "left of", "plate"}, {"plate", "left of", "lamp"}};
  task.truth.answer = "(B) " + task.options[1];
  return task;
}

std::string render_response(std::span<const int> tokens, const ToyTask& task) {
  int answer = 0;
  double shift = kBoxShift[2];
  int count = 0;
  std::string think;
  for (int tok : tokens) {
    if (tok < 4) {
      answer = tok;
    } else if (tok < 8) {
      shift = kBoxShift[static_cast<std::size_t>(tok - 4)];
    } else if (tok < 12) {
      count = tok - 8;
    } else if (tok == 12) {
      think += " <answer>";
    } else {
      think += std::string(" ") + kFiller[static_cast<std::size_t>(tok - 13)];
    }
  }

  const auto& gt = task.truth.subgraph;
  SceneGraph pred;
  auto shifted = [&](const BBox& b) {
    const double dx = shift * b.width();
    const double dy = shift * b.height();
    return BBox{b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy};
  };
  std::size_t n_obj = gt.objects.size();
  if (count == 1) n_obj -= 1;
  for (std::size_t i = 0; i < n_obj; ++i) {
    pred.objects.push_back({gt.objects[i].id, gt.objects[i].label, shifted(gt.objects[i].bbox)});
  }
  if (count == 2) pred.objects.push_back({"extra", "table", {10, 400, 300, 580}});
  if (count == 3) {
    for (std::size_t i = 0; i < 6; ++i) {
      const auto& o = gt.objects[i % gt.objects.size()];
      pred.objects.push_back({"dup" + std::to_string(i), o.label, shifted(o.bbox)});
    }
  }
  for (const auto& r : gt.relations) {
    if (pred.find(r.subject_id) && pred.find(r.object_id)) pred.relations.push_back(r);
  }
  const char key = static_cast<char>('A' + answer);
  return "<observe>A cup, a plate and a lamp on a table.</observe>\n<scene>" +
         serialize_scene(pred) + "</scene>\n<think>" + think +
         " </think>\n<answer>(" + std::string(1, key) + ") " +
         task.options[static_cast<std::size_t>(answer)] + "</answer>";
}

grpo::RolloutGroup GradcheckProblem::group_at(std::span<const double> theta) const {
  const auto policy = old_policy.with_theta(std::vector<double>(theta.begin(), theta.end()));
  grpo::RolloutGroup g;
  g.rewards = rewards;
  for (const auto& tok : tokens) {
    g.logp_new.push_back(policy.token_logprobs(tok));
    g.logp_old.push_back(old_policy.token_logprobs(tok));
    g.logp_ref.push_back(ref_policy.token_logprobs(tok));
  }
  return g;
}

double GradcheckProblem::loss(std::span<const double> theta) const {
  return grpo::grpo_loss(group_at(theta), grpo).loss;
}

std::vector<double> GradcheckProblem::gradient(std::span<const double> theta) const {
  const auto group = group_at(theta);
  const auto dlogp = grpo::grpo_loss_grad_logp(group, grpo);
  const auto policy = old_policy.with_theta(std::vector<double>(theta.begin(), theta.end()));
  std::vector<double> g(kVocab, 0.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto gi = policy.weighted_logprob_grad(tokens[i], dlogp[i]);
    for (std::size_t k = 0; k < kVocab; ++k) g[k] += gi[k];
  }
  g[0] *= gradient_bug;
  return g;
}

Objective GradcheckProblem::objective() const {
  return {[this](std::span<const double> x) { return loss(x); },
          [this](std::span<const double> x) { return gradient(x); }};
}

GradcheckProblem make_gradcheck_problem(const GradcheckSection& section,
                                        const grpo::GrpoConfig& grpo_cfg, std::uint64_t seed,
                                        const ScoringConfig& scoring) {
  Rng rng(Rng::derive(seed, 0x70c));
  auto base = ToyPolicy::random(Rng::derive(seed, 1), section.max_length);
  auto perturbed = [&](std::span<const double> from, double scale) {
    std::vector<double> theta(from.begin(), from.end());
    for (auto& v : theta) v += scale * rng.normal();
    return theta;
  };
  std::vector<double> zero(kVocab, 0.0);
  const auto theta_old = perturbed(zero, 0.5);
  GradcheckProblem p{base.with_theta(theta_old), base.with_theta(perturbed(theta_old, 0.1)),
                     perturbed(theta_old, section.perturbation), {}, {}, grpo_cfg};

  const auto task = default_task();
  const auto span = section.max_length - section.min_length + 1;
  for (std::size_t i = 0; i < section.trajectories; ++i) {
    const auto length = section.min_length + rng.below(span);
    auto tok = p.old_policy.sample(rng, length);
    p.rewards.push_back(total_reward(render_response(tok, task), task.truth, scoring).total);
    p.tokens.push_back(std::move(tok));
  }
  return p;
}

}  // namespace srl::toy
