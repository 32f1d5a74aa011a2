#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "srl/config.hpp"
#include "srl/simulation.hpp"
#include "srl/toy_policy.hpp"
#include "test_support.hpp"

using namespace srl;

TEST(Config, DefaultsRoundTrip) {
  const RunConfig def;
  EXPECT_EQ(parse_config(""), def);
  EXPECT_EQ(parse_config(to_config_text(def)), def);
}

TEST(Config, ModifiedRoundTrip) {
  RunConfig c;
  c.seed = 7;
  c.out = "/tmp/x y";
  c.reward.weights.w_format = 0.15;
  c.reward.weights.w_accuracy = 0.45;
  c.reward.accuracy_mode = AnswerMode::Letter;
  c.reward.clamp_negative_ciou = false;
  c.grpo.beta = 0.1 + 0.2;
  c.grpo.kl = grpo::KlEstimator::Naive;
  c.dataset.verifier = "exec:python3 verify.py --x";
  c.dataset.filter_before_split = false;
  c.simulation.episodes = 17;
  c.gradcheck.step = 3e-6;
  EXPECT_EQ(parse_config(to_config_text(c)), c);
}

TEST(Config, CommentsAndSections) {
  const auto c = parse_config("# comment\n[run]\nseed = 9\n; other\n[simulation]\nepisodes = 5\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.simulation.episodes, 5u);
}

TEST(Config, Errors) {
  EXPECT_THROW(load_config(test::fixture("bad_config.ini")), ConfigError);
  EXPECT_THROW(load_config(test::fixture("unknown_key.ini")), ConfigError);
  EXPECT_THROW(parse_config("[nope]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\nseed = banana\n"), ConfigError);
  EXPECT_THROW(parse_config("[grpo]\neps_low = 1.5\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent.ini"), ConfigError);
}

TEST(ToyPolicy, ProbabilitiesNormalized) {
  const auto p = toy::ToyPolicy::random(4, 10, 2.0).with_theta(std::vector<double>(toy::kVocab, 3.0));
  for (std::size_t t = 0; t < 10; ++t) {
    const auto pr = p.probabilities(t);
    EXPECT_NEAR(std::accumulate(pr.begin(), pr.end(), 0.0), 1.0, 1e-12);
    const auto lp = p.log_probabilities(t);
    for (std::size_t k = 0; k < toy::kVocab; ++k) EXPECT_NEAR(std::exp(lp[k]), pr[k], 1e-15);
  }
}

TEST(ToyPolicy, RenderedResponses) {
  const auto task = toy::default_task();
  const std::vector<int> good = {1, 4, 8, 13};
  const auto b = total_reward(toy::render_response(good, task), task.truth);
  EXPECT_NEAR(b.total, 1.0, 1e-12);
  const std::vector<int> broken = {1, 4, 8, 12};
  EXPECT_EQ(total_reward(toy::render_response(broken, task), task.truth).r_format, 0);
  const std::vector<int> wrong = {0, 4, 8};
  EXPECT_NEAR(total_reward(toy::render_response(wrong, task), task.truth).total, 0.3, 1e-12);
}

TEST(Simulation, OrderingsAtDefaultSeed) {
  const auto r = sim::simulate_hacking({}, 42);
  EXPECT_EQ(r.episodes.size(), 800u);
  EXPECT_TRUE(r.spam_spatial_exceeds_wrong());
  EXPECT_TRUE(r.spam_total_below_focused());
  EXPECT_LT(r.of(sim::AgentKind::BoxSpam).mean_count, r.of(sim::AgentKind::Focused).mean_count);
}

TEST(Simulation, WorkersDoNotChangeResults) {
  SimulationSection s;
  s.episodes = 40;
  const auto a = sim::simulate_hacking(s, 3);
  s.workers = 4;
  const auto b = sim::simulate_hacking(s, 3);
  EXPECT_EQ(sim::metrics_csv(a), sim::metrics_csv(b));
}

TEST(Simulation, SpamCountVanishes) {
  Rng rng(91);
  SimulationSection s;
  const auto ep = sim::make_episode(rng, s);
  double prev = 2.0;
  for (std::size_t boxes : {5u, 20u, 80u, 320u}) {
    s.spam_boxes = boxes;
    Rng arng(1);
    const auto b = total_reward(sim::agent_response(sim::AgentKind::BoxSpam, ep, arng, s), ep.truth);
    EXPECT_LE(b.r_count, prev);
    prev = b.r_count;
  }
  EXPECT_LT(prev, 0.05);
}
