#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "divexp/de_loop.hpp"

using namespace divexp;

namespace {

// One decision, then done: action 0 pays 0, action 1 pays -1.
class Bandit final : public Environment {
public:
    int num_actions() const override { return 2; }
    int state_dim() const override { return 1; }
    State reset(Rng&) const override { return {0.0}; }
    StepResult step(std::span<const double>, int action) const override {
        return {{0.0}, action == 0 ? 0.0 : -1.0, true};
    }
};

// Learner that ignores the data and returns a fixed table.
class FixedLearner final : public Learner {
public:
    explicit FixedLearner(double p0) : p0_(p0) {}
    PolicyPtr learn(std::span<const Trajectory>, const PolicyPtr&, double, Rng&, const std::string& id) const override {
        return std::make_shared<TabularPolicy>(id, std::vector<std::vector<double>>{{p0_, 1.0 - p0_}});
    }

private:
    double p0_;
};

Domain bandit_domain() {
    Domain d;
    d.env = std::make_shared<Bandit>();
    d.spec = MDPSpec{1.0, 1, -1.0, 0.0};
    d.num_states = 1;
    d.initial_policy = TabularPolicy::uniform("pi0", 1, 2);
    d.true_value = [](const Policy& p, Rng&) { return p.probability(std::vector<double>{0.0}, 0); };
    return d;
}

Trajectory single_reward(double r) {
    Trajectory t;
    t.transitions.push_back({{0.0}, 0, r, {0.0}, true});
    return t;
}

ExperimentConfig small_grid(std::uint64_t seed, int iterations) {
    auto cfg = ExperimentConfig::defaults_for(DomainKind::GridWorld);
    cfg.seed = seed;
    cfg.iterations = iterations;
    return cfg;
}

}  // namespace

TEST(Allocate, EqualSplit) { EXPECT_EQ(allocate(40, 4).counts, (std::vector<int>{10, 10, 10, 10})); }

TEST(Allocate, RemainderToLowestIndices) { EXPECT_EQ(allocate(40, 3).counts, (std::vector<int>{14, 13, 13})); }

TEST(Allocate, SinglePolicyTakesAll) { EXPECT_EQ(allocate(40, 1).counts, (std::vector<int>{40})); }

TEST(Allocate, TooManyPolicies) { EXPECT_THROW(allocate(3, 4), std::invalid_argument); }

TEST(Allocate, BalancedForAllSmallCases) {
    for (int n = 1; n <= 60; ++n) {
        for (int m = 1; m <= n; ++m) {
            const auto k = allocate(n, m);
            EXPECT_EQ(k.total(), n);
            EXPECT_LE(k.max() - k.min(), 1);
            EXPECT_EQ(k.size(), static_cast<std::size_t>(m));
        }
    }
}

TEST(RhoBaseline, ConstantReturns) {
    const TrajectorySet test(6, single_reward(-0.25));
    EXPECT_DOUBLE_EQ(compute_rho_baseline(test, MDPSpec{1.0, 1, -1.0, 0.0}, 0.05), 0.75);
}

TEST(RhoBaseline, WorkedExample) {
    const TrajectorySet test{single_reward(0.4), single_reward(0.5), single_reward(0.6)};
    EXPECT_NEAR(compute_rho_baseline(test, MDPSpec{1.0, 1, 0.0, 1.0}, 0.05), 0.3314, 1e-4);
}

TEST(RhoBaseline, NeedsTwoTrajectories) {
    const TrajectorySet test{single_reward(0.4)};
    EXPECT_THROW(compute_rho_baseline(test, MDPSpec{1.0, 1, 0.0, 1.0}, 0.05), std::invalid_argument);
}

TEST(RunIteration, SplitsOneFifthToTraining) {
    const Domain d = bandit_domain();
    ExperimentConfig cfg;
    LoopState state(d.initial_policy);
    FixedLearner learner(0.5);
    Rng a(1), b(2), c(3);
    const auto rec = run_iteration(state, d, learner, cfg, 1, 1, {a, b, c});
    EXPECT_EQ(rec.counts, std::vector<int>{40});
    EXPECT_EQ(rec.train_ids.size(), 8u);
    EXPECT_EQ(rec.test_ids.size(), 32u);
    EXPECT_EQ(state.train.size(), 8u);
    EXPECT_EQ(state.test.size(), 32u);
}

TEST(RunIteration, NoConfirmationKeepsDeployedSet) {
    const Domain d = bandit_domain();
    ExperimentConfig cfg;
    LoopState state(d.initial_policy);
    FixedLearner worse(0.01);
    Rng a(1), b(2), c(3);
    const auto rec = run_iteration(state, d, worse, cfg, 3, 1, {a, b, c});
    EXPECT_TRUE(rec.confirmed.empty());
    ASSERT_EQ(state.deployed.size(), 1u);
    EXPECT_EQ(state.deployed.front()->id(), "pi0");
    EXPECT_EQ(state.reference->id(), "pi0");
}

TEST(RunIteration, SingleCandidateConfirmationDeploysOne) {
    const Domain d = bandit_domain();
    ExperimentConfig cfg;
    cfg.alpha = 0.0;
    LoopState state(d.initial_policy);
    FixedLearner better(0.999);
    Rng a(1), b(2), c(3);
    const auto rec = run_iteration(state, d, better, cfg, 1, 1, {a, b, c});
    ASSERT_EQ(rec.confirmed.size(), 1u);
    ASSERT_EQ(state.deployed.size(), 1u);
    EXPECT_EQ(state.deployed.front()->id(), "j1c1");
    EXPECT_TRUE(state.behaviors.contains("j1c1"));
    EXPECT_NEAR(rec.candidates.front().true_value, 0.999, 1e-12);
}

TEST(RunIteration, SeveralConfirmedShareNextAllocation) {
    const Domain d = bandit_domain();
    ExperimentConfig cfg;
    cfg.alpha = 0.0;
    LoopState state(d.initial_policy);
    FixedLearner better(0.999);
    Rng a(1), b(2), c(3);
    const auto first = run_iteration(state, d, better, cfg, 3, 1, {a, b, c});
    ASSERT_EQ(first.confirmed.size(), 3u);
    const auto second = run_iteration(state, d, better, cfg, 3, 2, {a, b, c});
    EXPECT_EQ(second.counts, (std::vector<int>{14, 13, 13}));
    EXPECT_EQ(second.deployed, first.confirmed);
    EXPECT_GT(second.test_size, first.test_size);
}

TEST(RunExperiment, SameSeedSameRecords) {
    const auto cfg = small_grid(5, 3);
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    ASSERT_EQ(a.records.size(), 3u);
    ASSERT_EQ(b.records.size(), 3u);
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_EQ(a.records[j].deployed, b.records[j].deployed);
        EXPECT_EQ(a.records[j].confirmed, b.records[j].confirmed);
        EXPECT_EQ(a.records[j].rho_baseline, b.records[j].rho_baseline);
        EXPECT_EQ(a.records[j].mean_return, b.records[j].mean_return);
        EXPECT_EQ(a.records[j].joint_entropy, b.records[j].joint_entropy);
        ASSERT_EQ(a.records[j].candidates.size(), b.records[j].candidates.size());
        for (std::size_t i = 0; i < a.records[j].candidates.size(); ++i) {
            EXPECT_EQ(a.records[j].candidates[i].p_value, b.records[j].candidates[i].p_value);
        }
    }
}

TEST(RunExperiment, SingleIterationSmoke) {
    const auto r = run_experiment(small_grid(1, 1));
    EXPECT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.trajectories.size(), 40u);
}

TEST(RunExperiment, InvalidConfigRejected) {
    auto cfg = small_grid(1, 1);
    cfg.delta = 0.6;
    EXPECT_THROW(run_experiment(cfg), std::invalid_argument);
    cfg = small_grid(1, 1);
    cfg.candidates = 41;
    EXPECT_THROW(run_experiment(cfg), std::invalid_argument);
}

TEST(SpiBaseline, ForcesOneCandidate) {
    auto cfg = small_grid(3, 6);
    cfg.candidates = 5;
    const auto r = run_spi_baseline(cfg);
    EXPECT_EQ(r.algo, Algo::SPI);
    for (const auto& rec : r.records) {
        EXPECT_EQ(rec.candidates.size(), 1u);
        EXPECT_EQ(rec.counts, std::vector<int>{40});
        EXPECT_LE(rec.confirmations(), 1);
    }
}

// Audit of a full-length run: allocation, data separation, the safety
// lineage of every deployed policy and the baseline trend.
void audit(const RunResult& run) {
    std::set<std::string> certified{"pi0"};
    std::set<std::int64_t> train;
    std::set<std::int64_t> test;
    std::size_t previous_test = 0;
    for (const auto& rec : run.records) {
        SCOPED_TRACE("iteration " + std::to_string(rec.iteration));
        EXPECT_EQ(rec.counts.size(), rec.deployed.size());
        const auto [lo, hi] = std::minmax_element(rec.counts.begin(), rec.counts.end());
        EXPECT_LE(*hi - *lo, 1);

        for (const auto& id : rec.deployed) EXPECT_TRUE(certified.count(id)) << id;
        std::set<std::string> cand_ids;
        for (const auto& c : rec.candidates) {
            cand_ids.insert(c.id);
            if (c.confirmed) {
                EXPECT_LE(c.p_value, 0.05);
                EXPECT_FALSE(std::isnan(c.true_value));
            }
        }
        for (const auto& id : rec.confirmed) {
            EXPECT_TRUE(cand_ids.count(id));
            certified.insert(id);
        }

        train.insert(rec.train_ids.begin(), rec.train_ids.end());
        test.insert(rec.test_ids.begin(), rec.test_ids.end());
        EXPECT_GT(rec.test_size, previous_test);
        previous_test = rec.test_size;
    }
    for (auto id : train) EXPECT_FALSE(test.count(id)) << id;
    EXPECT_EQ(train.size() + test.size(), run.trajectories.size());

    double early = 0.0;
    double late = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
        early += run.records[j].rho_baseline;
        late += run.records[run.records.size() - 1 - j].rho_baseline;
    }
    EXPECT_GE(late, early);
}

TEST(LoopInvariants, FullRunDe) { audit(run_experiment(small_grid(17, 25), Algo::DE)); }

TEST(LoopInvariants, FullRunSpi) { audit(run_experiment(small_grid(17, 25), Algo::SPI)); }
