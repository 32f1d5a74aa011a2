#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "srl/gradcheck.hpp"
#include "srl/grpo.hpp"
#include "srl/rng.hpp"
#include "srl/toy_policy.hpp"

using namespace srl;
using namespace srl::grpo;

namespace {

RolloutGroup random_group(Rng& rng, std::size_t n, double spread) {
  RolloutGroup g;
  for (std::size_t i = 0; i < n; ++i) {
    g.rewards.push_back(rng.uniform());
    const auto len = 1 + rng.below(6);
    std::vector<double> nw, od, rf;
    for (std::size_t t = 0; t < len; ++t) {
      const double base = -rng.uniform(0.1, 4.0);
      od.push_back(base);
      nw.push_back(base + rng.uniform(-spread, spread));
      rf.push_back(base + rng.uniform(-spread, spread));
    }
    g.logp_new.push_back(nw);
    g.logp_old.push_back(od);
    g.logp_ref.push_back(rf);
  }
  return g;
}

// Direct evaluation of the objective, written independently of grpo_loss.
double loss_oracle(const RolloutGroup& g, double el, double eh, double beta) {
  const double n = double(g.size());
  const double mu = std::accumulate(g.rewards.begin(), g.rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : g.rewards) var += (r - mu) * (r - mu);
  const double sd = std::sqrt(var / n);
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = (g.rewards[i] - mu) / (sd + 1e-6);
    double s = 0.0;
    for (std::size_t t = 0; t < g.length(i); ++t) {
      const double r = std::exp(g.logp_new[i][t] - g.logp_old[i][t]);
      const double c = std::min(std::max(r, 1.0 - el), 1.0 + eh);
      const double x = g.logp_ref[i][t] - g.logp_new[i][t];
      s += std::min(r * a, c * a) - beta * (std::exp(x) - x - 1.0);
    }
    total += s / double(g.length(i));
  }
  return -total / n;
}

}  // namespace

TEST(Advantages, Examples) {
  const std::vector<double> r = {1, 0, 0, 0};
  auto a = group_advantages(r);
  EXPECT_NEAR(a[0], 1.7320, 1e-3);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(a[i], -0.5773, 1e-3);
  const double sd = std::sqrt(0.1875);
  EXPECT_NEAR(a[0], 0.75 / (sd + 1e-6), 1e-12);

  for (double x : group_advantages(std::vector<double>{0.4, 0.4, 0.4})) EXPECT_EQ(x, 0.0);
  EXPECT_THROW(group_advantages(std::vector<double>{1.0}), GrpoError);
}

TEST(Advantages, SumZeroBoundedAndPermutation) {
  Rng rng(71);
  for (int i = 0; i < 500; ++i) {
    const auto n = 2 + rng.below(15);
    std::vector<double> r(n);
    for (auto& x : r) x = rng.bernoulli(0.3) ? double(rng.below(2)) : rng.uniform(-5, 5);
    const auto a = group_advantages(r);
    EXPECT_NEAR(std::accumulate(a.begin(), a.end(), 0.0), 0.0, 1e-9);
    for (double x : a) EXPECT_LE(std::abs(x), std::sqrt(double(n - 1)) + 1e-9);
    auto rr = r;
    std::reverse(rr.begin(), rr.end());
    const auto ar = group_advantages(rr);
    for (std::size_t k = 0; k < n; ++k) EXPECT_EQ(ar[k], a[n - 1 - k]);
  }
}

TEST(Ratios, Examples) {
  RolloutGroup g;
  g.rewards = {1, 0};
  g.logp_old = {{-1.0, -2.0}, {-0.5}};
  g.logp_new = {{-1.0, -2.0 + std::log(2.0)}, {-0.5}};
  g.logp_ref = g.logp_new;
  const auto r = importance_ratios(g);
  EXPECT_EQ(r[0][0], 1.0);
  EXPECT_NEAR(r[0][1], 2.0, 1e-15);
  EXPECT_EQ(r[1][0], 1.0);
  g.logp_ref[0][1] = g.logp_new[0][1] + std::log(2.0);
  const auto kl = token_kl(g);
  EXPECT_EQ(kl[0][0], 0.0);
  EXPECT_NEAR(kl[0][1], 1.0 - std::log(2.0), 1e-12);
  EXPECT_NEAR(kl[0][1], 0.30685, 1e-5);
}

TEST(Ratios, PositiveAndKlNonNegative) {
  Rng rng(72);
  for (int i = 0; i < 200; ++i) {
    const auto g = random_group(rng, 4, 3.0);
    for (const auto& row : importance_ratios(g)) {
      for (double x : row) EXPECT_GT(x, 0.0);
    }
    for (const auto& row : token_kl(g)) {
      for (double x : row) EXPECT_GE(x, 0.0);
    }
  }
}

TEST(Alignment, Mismatch) {
  RolloutGroup g;
  g.rewards = {1, 0};
  g.logp_new = {{-1.0}, {-1.0, -2.0}};
  g.logp_old = {{-1.0}, {-1.0}};
  g.logp_ref = g.logp_new;
  try {
    grpo_loss(g);
    FAIL();
  } catch (const GrpoError& e) {
    EXPECT_EQ(e.kind(), GrpoError::Kind::AlignmentMismatch);
  }
  g.logp_old = g.logp_new;
  g.logp_new[0].clear();
  g.logp_old[0].clear();
  g.logp_ref[0].clear();
  EXPECT_THROW(grpo_loss(g), GrpoError);
}

TEST(Loss, DegenerateIsZero) {
  RolloutGroup g;
  g.rewards = {0.5, 0.5, 0.5};
  g.logp_new = {{-1.0, -0.2}, {-3.0}, {-0.1, -0.1, -0.7}};
  g.logp_old = g.logp_ref = g.logp_new;
  const auto rep = grpo_loss(g);
  EXPECT_EQ(rep.loss, 0.0);
  EXPECT_EQ(rep.clip_fraction, 0.0);
  EXPECT_EQ(rep.mean_kl, 0.0);
}

TEST(Loss, ClippedSingleToken) {
  // Trajectory 0 has A = +1 and ratio 2; trajectory 1 mirrors it so the
  // group mean is zero.
  RolloutGroup g;
  g.rewards = {1, -1};
  g.logp_old = {{-1.0}, {-1.0}};
  g.logp_new = {{-1.0 + std::log(2.0)}, {-1.0}};
  g.logp_ref = g.logp_new;
  GrpoConfig cfg;
  cfg.beta = 0.0;
  cfg.epsilon = 1e-300;
  const auto rep = grpo_loss(g, cfg);
  EXPECT_NEAR(rep.advantages[0], 1.0, 1e-12);
  // contributions: -1.3 (clipped) and +1 (ratio 1, A = -1), averaged and negated
  EXPECT_NEAR(rep.loss, -(1.3 - 1.0) / 2.0, 1e-12);
  EXPECT_EQ(rep.clip_fraction, 0.5);
}

TEST(Loss, UnclippedMatchesClosedForm) {
  Rng rng(73);
  GrpoConfig cfg;
  cfg.beta = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto g = random_group(rng, 2 + rng.below(7), 0.1);
    const auto a = group_advantages(g.rewards);
    double expected = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      double m = 0.0;
      for (std::size_t t = 0; t < g.length(k); ++t) m += std::exp(g.logp_new[k][t] - g.logp_old[k][t]);
      expected += a[k] * m / double(g.length(k));
    }
    expected = -expected / double(g.size());
    const auto rep = grpo_loss(g, cfg);
    EXPECT_NEAR(rep.loss, expected, 1e-12);
    EXPECT_EQ(rep.clip_fraction, 0.0);
  }
}

TEST(Loss, MatchesDirectOracle) {
  Rng rng(74);
  for (int i = 0; i < 300; ++i) {
    const auto g = random_group(rng, 2 + rng.below(7), 1.0);
    EXPECT_NEAR(grpo_loss(g).loss, loss_oracle(g, 0.2, 0.3, 1e-2), 1e-12);
  }
}

TEST(Loss, ShiftInvariant) {
  Rng rng(75);
  for (int i = 0; i < 200; ++i) {
    auto g = random_group(rng, 2 + rng.below(7), 1.0);
    const double base = grpo_loss(g).loss;
    const double c = rng.uniform(-10, 10);
    for (auto& r : g.rewards) r += c;
    EXPECT_NEAR(grpo_loss(g).loss, base, 1e-9);
  }
}

TEST(Loss, NoClippingWhenOnPolicy) {
  Rng rng(76);
  auto g = random_group(rng, 6, 1.0);
  g.logp_new = g.logp_old;
  EXPECT_EQ(grpo_loss(g).clip_fraction, 0.0);
}

TEST(LossGradient, SignOppositeAdvantageOnPolicy) {
  Rng rng(77);
  GrpoConfig cfg;
  cfg.beta = 0.0;
  auto g = random_group(rng, 8, 1.0);
  g.logp_new = g.logp_old;
  const auto a = group_advantages(g.rewards);
  const auto grad = grpo_loss_grad_logp(g, cfg);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (double d : grad[i]) {
      if (a[i] != 0.0) EXPECT_LT(d * a[i], 0.0);
    }
  }
}

TEST(LossGradient, SignOnToyPolicy) {
  // On policy with beta = 0, a small descent step raises the log-probability
  // of the best trajectory and lowers that of the worst.
  GradcheckSection sec;
  sec.perturbation = 0.0;
  GrpoConfig cfg;
  cfg.beta = 0.0;
  auto prob = toy::make_gradcheck_problem(sec, cfg, 3);
  prob.old_policy = prob.old_policy.with_theta(prob.theta_new);
  const auto best = std::max_element(prob.rewards.begin(), prob.rewards.end()) - prob.rewards.begin();
  const auto worst = std::min_element(prob.rewards.begin(), prob.rewards.end()) - prob.rewards.begin();
  ASSERT_NE(prob.rewards[best], prob.rewards[worst]);
  const auto grad = prob.gradient(prob.theta_new);
  auto stepped = prob.theta_new;
  for (std::size_t k = 0; k < stepped.size(); ++k) stepped[k] -= 1e-4 * grad[k];
  auto sum_logp = [&](const std::vector<double>& theta, std::size_t i) {
    const auto lp = prob.old_policy.with_theta(theta).token_logprobs(prob.tokens[i]);
    return std::accumulate(lp.begin(), lp.end(), 0.0);
  };
  EXPECT_GT(sum_logp(stepped, best), sum_logp(prob.theta_new, best));
  EXPECT_LT(sum_logp(stepped, worst), sum_logp(prob.theta_new, worst));
  EXPECT_LT(prob.loss(stepped), prob.loss(prob.theta_new));
}

TEST(GradCheck, QuadraticIsExact) {
  Objective q;
  q.value = [](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (double(i) + 1.0) * x[i] * x[i] + 0.5 * x[i];
    return s;
  };
  q.gradient = [](std::span<const double> x) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2.0 * (double(i) + 1.0) * x[i] + 0.5;
    return g;
  };
  const std::vector<double> x = {0.3, -1.2, 2.5, 0.0, 4.0};
  EXPECT_LT(finite_difference_check(q, x, 1e-3).max_relative_error, 1e-8);
}

TEST(GradCheck, NonFinite) {
  Objective q;
  q.value = [](std::span<const double> x) { return x[0]; };
  q.gradient = [](std::span<const double>) { return std::vector<double>{std::nan("")}; };
  const std::vector<double> x = {1.0};
  EXPECT_THROW(finite_difference_check(q, x, 1e-5), NonFiniteGradient);
}

TEST(GradCheck, ToyPolicyPassesAndBugIsCaught) {
  const auto prob = toy::make_gradcheck_problem({}, {}, 42);
  const auto obj = prob.objective();
  EXPECT_LT(finite_difference_check(obj, prob.theta_new, 1e-5).max_relative_error, 1e-4);

  auto buggy = prob;
  buggy.gradient_bug = 1.01;
  EXPECT_GT(finite_difference_check(buggy.objective(), buggy.theta_new, 1e-5).max_relative_error, 1e-3);
}

TEST(GradCheck, TruncationGrowsWithStep) {
  // Smooth non-quadratic objective: central-difference error scales as h^2.
  Objective f;
  f.value = [](std::span<const double> x) { return std::sin(x[0]) * std::exp(x[1]); };
  f.gradient = [](std::span<const double> x) {
    return std::vector<double>{std::cos(x[0]) * std::exp(x[1]), std::sin(x[0]) * std::exp(x[1])};
  };
  const std::vector<double> x = {0.7, 0.3};
  const double e1 = finite_difference_check(f, x, 1e-1).max_relative_error;
  const double e2 = finite_difference_check(f, x, 5e-2).max_relative_error;
  EXPECT_NEAR(e1 / e2, 4.0, 0.2);
}

TEST(Rollout, JsonRoundTripBitExact) {
  Rng rng(78);
  for (int i = 0; i < 200; ++i) {
    auto g = random_group(rng, 2 + rng.below(6), 2.0);
    g.rewards[0] = 0.1 + 0.2;
    g.logp_new[0][0] = -std::nextafter(1.0, 2.0);
    const auto back = rollout_from_json(rollout_to_json(g));
    EXPECT_EQ(back, g);
    EXPECT_EQ(rollout_to_json(back), rollout_to_json(g));
  }
}

TEST(Rollout, ParseErrors) {
  EXPECT_THROW(rollout_from_json("{"), GrpoError);
  try {
    rollout_from_json(R"({"rewards":[1,0],"lengths":[1,1],"logp_new":[[-1],[-1]],"logp_old":[[-1],[-1]],"logp_ref":[[-1]]})");
    FAIL();
  } catch (const GrpoError& e) {
    EXPECT_EQ(e.kind(), GrpoError::Kind::AlignmentMismatch);
  }
}
