#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "divexp/gridworld.hpp"
#include "divexp/mdp.hpp"

using namespace divexp;

namespace {

// Single state, every action ends the episode with reward -1.
class OneShotEnv final : public Environment {
public:
    int num_actions() const override { return 2; }
    int state_dim() const override { return 1; }
    State reset(Rng&) const override { return {0.0}; }
    StepResult step(std::span<const double>, int) const override { return {{0.0}, -1.0, true}; }
};

Trajectory make_trajectory(std::vector<double> rewards) {
    Trajectory t;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        t.transitions.push_back({{static_cast<double>(i)}, 0, rewards[i], {static_cast<double>(i + 1)},
                                 i + 1 == rewards.size()});
    }
    return t;
}

std::shared_ptr<const TabularPolicy> random_policy(const std::string& id, int states, int actions, Rng& rng) {
    std::gamma_distribution<double> g(1.0, 1.0);
    std::vector<std::vector<double>> table(states, std::vector<double>(actions));
    for (auto& row : table) {
        double sum = 0.0;
        for (auto& p : row) sum += (p = g(rng) + 1e-3);
        for (auto& p : row) p /= sum;
    }
    return std::make_shared<TabularPolicy>(id, table);
}

}  // namespace

TEST(MixPolicies, AlphaZeroIsTarget) {
    auto base = TabularPolicy::uniform("base", 1, 2);
    auto target = std::make_shared<TabularPolicy>("t", std::vector<std::vector<double>>{{0.9, 0.1}});
    auto m = mix_policies(base, target, 0.0, "m");
    const double s = 0.0;
    EXPECT_EQ(m->probability(std::span(&s, 1), 0), 0.9);
    EXPECT_EQ(m->probability(std::span(&s, 1), 1), 0.1);
}

TEST(MixPolicies, AlphaOneIsBase) {
    auto base = TabularPolicy::uniform("base", 1, 2);
    auto target = std::make_shared<TabularPolicy>("t", std::vector<std::vector<double>>{{0.9, 0.1}});
    auto m = mix_policies(base, target, 1.0, "m");
    const double s = 0.0;
    EXPECT_EQ(m->probability(std::span(&s, 1), 0), 0.5);
}

TEST(MixPolicies, WorkedExample) {
    auto base = TabularPolicy::uniform("base", 1, 2);
    auto target = std::make_shared<TabularPolicy>("t", std::vector<std::vector<double>>{{1.0, 0.0}});
    auto m = mix_policies(base, target, 0.3, "m");
    const auto d = m->action_distribution(std::vector<double>{0.0});
    EXPECT_NEAR(d[0], 0.85, 1e-15);
    EXPECT_NEAR(d[1], 0.15, 1e-15);
}

TEST(MixPolicies, MismatchedActionsRejected) {
    auto base = TabularPolicy::uniform("base", 1, 2);
    auto target = TabularPolicy::uniform("t", 1, 3);
    EXPECT_THROW(mix_policies(base, target, 0.5, "m"), std::invalid_argument);
}

TEST(MixPolicies, AlphaOutOfRangeRejected) {
    auto base = TabularPolicy::uniform("base", 1, 2);
    EXPECT_THROW(mix_policies(base, base, 1.5, "m"), std::invalid_argument);
}

TEST(MixPolicies, AffineAtEveryState) {
    Rng rng(7);
    auto a = random_policy("a", 16, 5, rng);
    auto b = random_policy("b", 16, 5, rng);
    for (double alpha : {0.0, 0.1, 0.3, 0.9, 1.0}) {
        auto m = mix_policies(a, b, alpha, "m");
        for (int s = 0; s < 16; ++s) {
            const std::vector<double> st{static_cast<double>(s)};
            const auto d = m->action_distribution(st);
            double sum = 0.0;
            for (int act = 0; act < 5; ++act) {
                EXPECT_EQ(d[act], (1.0 - alpha) * b->row(s)[act] + alpha * a->row(s)[act]);
                sum += d[act];
            }
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
    }
}

TEST(Policy, DistributionsSumToOne) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        auto p = random_policy("p", 8, 4, rng);
        for (int s = 0; s < 8; ++s) {
            double sum = 0.0;
            for (double x : p->action_distribution(std::vector<double>{static_cast<double>(s)})) sum += x;
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
    }
}

TEST(NormalizedReturn, UpperBound) {
    MDPSpec spec{0.7, 10, -10.0, -1.0};
    EXPECT_DOUBLE_EQ(normalized_return(make_trajectory({-1.0}), spec), 1.0);
}

TEST(NormalizedReturn, LowerBound) {
    MDPSpec spec{0.7, 10, -10.0, -1.0};
    EXPECT_DOUBLE_EQ(normalized_return(make_trajectory({-10.0}), spec), 0.0);
}

TEST(NormalizedReturn, DiscountedPair) {
    MDPSpec spec{0.5, 10, 0.0, 2.0};
    EXPECT_DOUBLE_EQ(normalized_return(make_trajectory({1.0, 1.0}), spec), 0.75);
}

TEST(NormalizedReturn, TinyOvershootClamped) {
    MDPSpec spec{1.0, 10, 0.0, 1.0};
    EXPECT_EQ(normalized_return(make_trajectory({1.0 + 1e-12}), spec), 1.0);
}

TEST(NormalizedReturn, OutOfBoundsRejected) {
    MDPSpec spec{1.0, 10, 0.0, 1.0};
    EXPECT_THROW(normalized_return(make_trajectory({1.5}), spec), std::domain_error);
}

TEST(NormalizedReturn, MonotoneInEachReward) {
    MDPSpec spec{0.9, 10, -20.0, 0.0};
    const std::vector<double> base{-1.0, -2.0, -3.0, -1.5};
    const double r0 = normalized_return(make_trajectory(base), spec);
    for (std::size_t i = 0; i < base.size(); ++i) {
        auto bumped = base;
        bumped[i] += 1e-3;
        EXPECT_GT(normalized_return(make_trajectory(bumped), spec), r0);
    }
}

TEST(GenerateTrajectory, ImmediateTermination) {
    OneShotEnv env;
    auto pi = TabularPolicy::uniform("u", 1, 2);
    Rng rng(1);
    const auto t = generate_trajectory(env, *pi, rng, MDPSpec{1.0, 5, -5.0, 0.0});
    EXPECT_EQ(t.size(), 1u);
    EXPECT_TRUE(t.transitions.back().terminal);
    EXPECT_EQ(t.behavior_id, "u");
}

TEST(GenerateTrajectory, OptimalGridPolicyTakesThreeSteps) {
    grid::GridWorldPlus env;
    std::vector<int> acts(grid::kNumStates, grid::kUp);
    const auto opt = grid::optimal_actions();
    for (int s = 0; s < grid::kNumStates; ++s) {
        if (!opt[s].empty()) acts[s] = opt[s].front();
    }
    std::vector<std::vector<double>> table(grid::kNumStates, std::vector<double>(grid::kNumActions, 0.0));
    for (int s = 0; s < grid::kNumStates; ++s) table[s][acts[s]] = 1.0;
    TabularPolicy pi("opt", table);
    Rng rng(3);
    const auto t = generate_trajectory(env, pi, rng, grid::default_spec());
    EXPECT_EQ(t.size(), 3u);
    EXPECT_DOUBLE_EQ(normalized_return(t, grid::default_spec()), 1.0);
}

TEST(GenerateTrajectory, SameSeedSameTrajectory) {
    grid::GridWorldPlus env;
    auto pi = TabularPolicy::uniform("u", grid::kNumStates, grid::kNumActions);
    Rng a(99);
    Rng b(99);
    const auto ta = generate_trajectory(env, *pi, a, grid::default_spec());
    const auto tb = generate_trajectory(env, *pi, b, grid::default_spec());
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
        EXPECT_EQ(ta.transitions[i].state, tb.transitions[i].state);
        EXPECT_EQ(ta.transitions[i].action, tb.transitions[i].action);
        EXPECT_EQ(ta.transitions[i].reward, tb.transitions[i].reward);
    }
}

TEST(GenerateTrajectory, HorizonCapsLength) {
    grid::GridWorldPlus env;
    // Always left: never reaches the goal from the start.
    std::vector<std::vector<double>> table(grid::kNumStates, std::vector<double>(grid::kNumActions, 0.0));
    for (auto& row : table) row[grid::kLeft] = 1.0;
    TabularPolicy pi("left", table);
    Rng rng(5);
    const auto t = generate_trajectory(env, pi, rng, grid::default_spec());
    EXPECT_EQ(t.size(), 100u);
    EXPECT_DOUBLE_EQ(normalized_return(t, grid::default_spec()), 0.0);
}

TEST(GenerateTrajectory, SupportFloorEnforced) {
    grid::GridWorldPlus env;
    std::vector<std::vector<double>> table(grid::kNumStates, std::vector<double>(grid::kNumActions, 0.0));
    for (auto& row : table) row[grid::kDiagUpRight] = 1.0;
    TabularPolicy pi("det", table);
    Rng rng(5);
    EXPECT_THROW(generate_trajectory(env, pi, rng, grid::default_spec(), 1e-6), std::domain_error);
}

TEST(Trajectory, ValidateChecksChaining) {
    MDPSpec spec{1.0, 10, -10.0, 0.0};
    auto t = make_trajectory({-1.0, -1.0});
    EXPECT_NO_THROW(t.validate(spec));
    t.transitions[1].state = {5.0};
    EXPECT_THROW(t.validate(spec), std::invalid_argument);
}

TEST(DeriveSeed, StreamsDiffer) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
    EXPECT_EQ(derive_seed(42, 3, 9), derive_seed(42, 3, 9));
}
