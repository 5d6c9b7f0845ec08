#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ces/core/error.hpp"
#include "ces/core/rng.hpp"
#include "ces/grpo/grpo.hpp"

using namespace ces;

namespace {

CandidateGroup group_of(const std::vector<double>& logp_new, const std::vector<double>& logp_old,
                        const std::vector<double>& adv) {
  CandidateGroup g;
  g.context_key = "k";
  for (std::size_t i = 0; i < logp_new.size(); ++i) {
    g.candidates.push_back({"p" + std::to_string(i), 0.0, logp_new[i], logp_old[i], logp_old[i]});
  }
  g.advantages = adv;
  return g;
}

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double pop_std(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

}  // namespace

TEST(GroupAdvantages, Examples) {
  const auto a = group_advantages({1, 0, 0, 1}, 1e-6);
  const std::vector<double> want = {1, -1, -1, 1};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a[i], want[i], 1e-12);
  for (double x : group_advantages({0.28, 0.28, 0.28, 0.28}, 1e-6)) EXPECT_EQ(x, 0.0);
  const auto b = group_advantages({1, 0}, 1e-6);
  EXPECT_NEAR(b[0], 1.0, 1e-12);
  EXPECT_NEAR(b[1], -1.0, 1e-12);
}

TEST(GroupAdvantages, Errors) {
  EXPECT_THROW(group_advantages({}, 1e-6), Error);
  EXPECT_THROW(group_advantages({1.0, std::nan("")}, 1e-6), Error);
}

TEST(GroupAdvantages, ZeroMeanUnitStdAndShiftInvariant) {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> r(2 + rng.below(15));
    for (auto& x : r) x = rng.uniform() * 4 - 2;
    const auto a = group_advantages(r, 1e-6);
    ASSERT_LT(std::abs(mean_of(a)), 1e-9);
    ASSERT_NEAR(pop_std(a), 1.0, 1e-9);
    const double c = rng.uniform() * 10 - 5;
    std::vector<double> shifted = r;
    for (auto& x : shifted) x += c;
    const auto b = group_advantages(shifted, 1e-6);
    for (std::size_t k = 0; k < a.size(); ++k) ASSERT_NEAR(a[k], b[k], 1e-9);
  }
}

TEST(ImportanceRatio, Examples) {
  EXPECT_DOUBLE_EQ(importance_ratio(-2.0, -2.0), 1.0);
  EXPECT_NEAR(importance_ratio(-1.0, -2.0), std::exp(1.0), 1e-12);
  EXPECT_NEAR(importance_ratio(-3.0, -2.0), std::exp(-1.0), 1e-12);
}

TEST(ClippedSurrogate, Examples) {
  EXPECT_DOUBLE_EQ(clipped_surrogate(1.0, 2.0, 0.2), 2.0);
  EXPECT_NEAR(clipped_surrogate(1.5, 1.0, 0.2), 1.2, 1e-12);
  EXPECT_NEAR(clipped_surrogate(0.5, -1.0, 0.2), -0.8, 1e-12);
}

TEST(ClippedSurrogate, MatchesAnalyticMinOnGrid) {
  for (int r = 5; r <= 15; ++r) {
    const double rho = r / 10.0;
    for (double adv : {-2.0, -1.0, 1.0, 2.0}) {
      for (double eps : {0.1, 0.2}) {
        const double clipped = std::min(std::max(rho, 1 - eps), 1 + eps);
        const double want = std::min(rho * adv, clipped * adv);
        EXPECT_NEAR(clipped_surrogate(rho, adv, eps), want, 1e-12);
        EXPECT_LE(clipped_surrogate(rho, adv, eps), rho * adv + 1e-12);
        if (rho >= 1 - eps - 1e-12 && rho <= 1 + eps + 1e-12) {
          EXPECT_NEAR(clipped_surrogate(rho, adv, eps), rho * adv, 1e-12);
        }
      }
    }
  }
}

TEST(KlPenalty, Examples) {
  EXPECT_DOUBLE_EQ(kl_penalty(-2.0, -2.0), 0.0);
  EXPECT_NEAR(kl_penalty(0.0, -1.0), std::exp(-1.0) + 1.0 - 1.0, 1e-12);
  EXPECT_NEAR(kl_penalty(-1.0, 0.0), std::exp(1.0) - 1.0 - 1.0, 1e-12);
}

TEST(KlPenalty, NonNegative) {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) {
    ASSERT_GE(kl_penalty(rng.uniform() * 20 - 10, rng.uniform() * 20 - 10), 0.0);
  }
}

TEST(GrpoObjective, Examples) {
  GrpoConfig cfg;
  cfg.clip_epsilon = 0.2;
  cfg.kl_beta = 0.0;
  EXPECT_NEAR(grpo_objective(group_of({-1, -1}, {-1, -1}, {1, -1}), cfg), 0.0, 1e-12);
  EXPECT_NEAR(grpo_objective(group_of({std::log(1.5), 0.0}, {0.0, 0.0}, {1, -1}), cfg), 0.1, 1e-12);
  auto g = group_of({-1.0, -2.0, -0.5}, {-1.0, -2.0, -0.5}, {0.5, -1.0, 0.5});
  GrpoConfig with_kl = cfg;
  with_kl.kl_beta = 0.1;
  EXPECT_NEAR(grpo_objective(g, with_kl), grpo_objective(g, cfg), 1e-12);
}

TEST(GrpoObjective, Errors) {
  GrpoConfig cfg;
  auto g = group_of({-1}, {-1}, {0});
  g.advantages.reset();
  EXPECT_THROW(grpo_objective(g, cfg), Error);
  auto h = group_of({-1}, {-1}, {0});
  h.candidates[0].logp_old.reset();
  try {
    grpo_objective(h, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingLogProb);
  }
}

TEST(GrpoGradient, MatchesFiniteDifferencesInLogp) {
  Rng rng(13);
  GrpoConfig cfg;
  cfg.kl_beta = 0.05;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(5);
    std::vector<double> lnew(n), lold(n), adv(n);
    for (std::size_t i = 0; i < n; ++i) {
      lold[i] = -rng.uniform() * 3;
      lnew[i] = lold[i] + (rng.uniform() - 0.5) * 0.6;
      adv[i] = rng.uniform() * 2 - 1;
    }
    auto g = group_of(lnew, lold, adv);
    for (std::size_t i = 0; i < n; ++i) g.candidates[i].logp_ref = lold[i] - 0.1;
    const auto grad = grpo_logp_gradient(g, cfg);
    for (std::size_t i = 0; i < n; ++i) {
      const double rho = std::exp(lnew[i] - lold[i]);
      // Skip points within h of a clip kink.
      if (std::abs(rho - (1 + cfg.clip_epsilon)) < 1e-3 || std::abs(rho - (1 - cfg.clip_epsilon)) < 1e-3) {
        continue;
      }
      const double h = 1e-6;
      auto up = g;
      auto down = g;
      *up.candidates[i].logp_new += h;
      *down.candidates[i].logp_new -= h;
      const double fd = (grpo_objective(up, cfg) - grpo_objective(down, cfg)) / (2 * h);
      ASSERT_NEAR(grad[i], fd, 1e-6 + 1e-4 * std::abs(fd));
    }
  }
}

TEST(CandidateGroup, JsonRoundTrip) {
  auto g = group_of({-1, -2}, {-1, -2}, {1, -1});
  g.candidates[0].reward = 0.28;
  EXPECT_EQ(Json::parse(Json(g).dump()).get<CandidateGroup>(), g);
  g.compute_advantages(1e-6);
  EXPECT_TRUE(g.advantages);
}
