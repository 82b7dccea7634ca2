#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "divexp/candidates.hpp"
#include "divexp/fqi.hpp"
#include "divexp/gridworld.hpp"
#include "divexp/policy_search.hpp"

using namespace divexp;

namespace {

TrajectorySet tagged(const std::vector<int>& sizes) {
    TrajectorySet out;
    std::int64_t id = 0;
    for (std::size_t it = 0; it < sizes.size(); ++it) {
        for (int k = 0; k < sizes[it]; ++k) {
            Trajectory t;
            t.iteration = static_cast<int>(it + 1);
            t.traj_id = id++;
            t.transitions.push_back({{0.0}, 0, -1.0, {0.0}, true});
            out.push_back(t);
        }
    }
    return out;
}

std::map<int, int> group_sizes(const TrajectorySet& data) {
    std::map<int, int> sizes;
    for (const auto& t : data) ++sizes[t.iteration];
    return sizes;
}

// Deterministic two-state chain on x in {0, 1}:
//   x=0: a0 -> x=1 (r 0), a1 -> x=0 (r -1)
//   x=1: a0 -> end (r 1), a1 -> x=0 (r 0)
struct ChainStep {
    int next;
    double reward;
    bool terminal;
};
constexpr ChainStep chain(int s, int a) {
    if (s == 0) return a == 0 ? ChainStep{1, 0.0, false} : ChainStep{0, -1.0, false};
    return a == 0 ? ChainStep{1, 1.0, true} : ChainStep{0, 0.0, false};
}

std::array<std::array<double, 2>, 2> chain_value_iteration(double gamma) {
    std::array<std::array<double, 2>, 2> q{};
    for (int it = 0; it < 2000; ++it) {
        auto next = q;
        for (int s = 0; s < 2; ++s) {
            for (int a = 0; a < 2; ++a) {
                const auto st = chain(s, a);
                const double cont = st.terminal ? 0.0 : std::max(q[st.next][0], q[st.next][1]);
                next[s][a] = st.reward + gamma * cont;
            }
        }
        q = next;
    }
    return q;
}

TrajectorySet chain_data() {
    TrajectorySet data;
    for (int s = 0; s < 2; ++s) {
        for (int a = 0; a < 2; ++a) {
            const auto st = chain(s, a);
            Trajectory t;
            t.transitions.push_back({{double(s)}, a, st.reward, {double(st.terminal ? s : st.next)}, st.terminal});
            data.push_back(t);
        }
    }
    return data;
}

std::shared_ptr<const Policy> softened_optimal() {
    const auto opt = grid::optimal_actions();
    std::vector<std::vector<double>> table(grid::kNumStates, std::vector<double>(grid::kNumActions, 0.01));
    for (int s = 0; s < grid::kNumStates; ++s) table[s][opt[s].empty() ? grid::kUp : opt[s].front()] = 0.96;
    return std::make_shared<TabularPolicy>("soft-opt", table);
}

// Records what each call saw so candidate generation can be audited.
class RecordingLearner final : public Learner {
public:
    mutable std::vector<std::vector<std::int64_t>> seen;
    PolicyPtr learn(std::span<const Trajectory> data, const PolicyPtr& reference, double, Rng&,
                    const std::string& id) const override {
        std::vector<std::int64_t> ids;
        for (const auto& t : data) ids.push_back(t.traj_id);
        seen.push_back(ids);
        auto u = TabularPolicy::uniform(id, 1, reference->num_actions());
        return u;
    }
};

}  // namespace

TEST(Bootstrap, PreservesGroupSizes) {
    const auto data = tagged({8, 8, 8});
    Rng rng(1);
    const auto out = bootstrap_per_iteration(data, rng);
    EXPECT_EQ(group_sizes(out), (std::map<int, int>{{1, 8}, {2, 8}, {3, 8}}));
}

TEST(Bootstrap, DrawsWithinOwnGroup) {
    const auto data = tagged({3, 5, 2, 7});
    Rng rng(2);
    for (int rep = 0; rep < 200; ++rep) {
        const auto out = bootstrap_per_iteration(data, rng);
        EXPECT_EQ(group_sizes(out), group_sizes(data));
        for (const auto& t : out) EXPECT_EQ(data[static_cast<std::size_t>(t.traj_id)].iteration, t.iteration);
    }
}

TEST(Bootstrap, SingleTrajectoryGroup) {
    const auto data = tagged({1});
    Rng rng(3);
    const auto out = bootstrap_per_iteration(data, rng);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].traj_id, data[0].traj_id);
}

TEST(Bootstrap, DistinctFractionNearLimit) {
    const int g = 200;
    const auto data = tagged({g});
    Rng rng(4);
    double total = 0.0;
    const int reps = 10000;
    for (int rep = 0; rep < reps; ++rep) {
        std::set<std::int64_t> distinct;
        for (const auto& t : bootstrap_per_iteration(data, rng)) distinct.insert(t.traj_id);
        total += static_cast<double>(distinct.size()) / g;
    }
    const double expected = 1.0 - std::pow(1.0 - 1.0 / g, g);
    EXPECT_NEAR(total / reps, expected, 0.01);
    EXPECT_NEAR(total / reps, 0.632, 0.01);
}

TEST(Fourier, BasisSize) {
    FourierBasis b(3, {0.0, 0.0}, {1.0, 1.0});
    EXPECT_EQ(b.size(), 16);
    FourierBasis c(3, {0, 0, 0, 0}, {1, 1, 1, 1});
    EXPECT_EQ(c.size(), 256);
    const std::array<double, 2> s{0.0, 0.0};
    EXPECT_TRUE(b.features(s).isApproxToConstant(1.0));
}

TEST(Fqi, OneStepRegression) {
    TrajectorySet data;
    for (int rep = 0; rep < 3; ++rep) {
        for (int a = 0; a < 2; ++a) {
            Trajectory t;
            t.transitions.push_back({{0.5}, a, a == 0 ? 1.0 : 0.0, {0.5}, true});
            data.push_back(t);
        }
    }
    FourierBasis basis(3, {0.0}, {1.0});
    const auto q = fqi_learn(data, basis, 2, FqiConfig{10, 0.0, 1e-6});
    const std::array<double, 1> s{0.5};
    EXPECT_NEAR(q.value(s, 0), 1.0, 1e-4);
    EXPECT_NEAR(q.value(s, 1), 0.0, 1e-4);
}

TEST(Fqi, ChainMatchesValueIteration) {
    const double gamma = 0.5;
    const auto oracle = chain_value_iteration(gamma);
    FourierBasis basis(1, {0.0}, {1.0});
    const auto q = fqi_learn(chain_data(), basis, 2, FqiConfig{50, gamma, 1e-12});
    for (int s = 0; s < 2; ++s) {
        const std::array<double, 1> st{double(s)};
        for (int a = 0; a < 2; ++a) EXPECT_NEAR(q.value(st, a), oracle[s][a], 1e-6) << s << ',' << a;
    }
}

TEST(Fqi, UnseenActionKeepsZeroWeights) {
    TrajectorySet data;
    Trajectory t;
    t.transitions.push_back({{0.2}, 0, -1.0, {0.3}, false});
    t.transitions.push_back({{0.3}, 2, -1.0, {0.4}, true});
    data.push_back(t);
    FourierBasis basis(3, {0.0}, {1.0});
    const auto q = fqi_learn(data, basis, 3, FqiConfig{});
    EXPECT_TRUE(q.weights(1).isZero(0.0));
    EXPECT_FALSE(q.weights(0).isZero(0.0));
}

TEST(RidgeFit, MinimizesPenalizedResidual) {
    Rng rng(5);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(30, 6);
    Eigen::VectorXd y(30);
    for (int i = 0; i < 30; ++i) {
        for (int j = 0; j < 6; ++j) x(i, j) = g(rng);
        y[i] = g(rng);
    }
    const double ridge = 0.1;
    const auto w = ridge_fit(x, y, ridge);
    auto loss = [&](const Eigen::VectorXd& v) { return (x * v - y).squaredNorm() + ridge * v.squaredNorm(); };
    const double best = loss(w);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd d(6);
        for (int j = 0; j < 6; ++j) d[j] = 1e-3 * g(rng);
        EXPECT_LE(best, loss(w + d));
    }
}

TEST(PolicyFromQ, SoftenedArgmax) {
    FourierBasis basis(0, {0.0}, {1.0});
    FourierQ q(basis, 3);
    q.weights(1)[0] = 2.0;
    const auto pi = policy_from_q(q, 1e-6, "g");
    const auto d = pi->action_distribution(std::vector<double>{0.5});
    EXPECT_NEAR(d[1], 0.999998, 1e-15);
    EXPECT_EQ(d[0], 1e-6);
    EXPECT_EQ(d[2], 1e-6);
    EXPECT_NEAR(d[0] + d[1] + d[2], 1.0, 1e-12);
}

TEST(PolicyFromQ, TieGoesToLowestAction) {
    FourierBasis basis(0, {0.0}, {1.0});
    FourierQ q(basis, 3);
    q.weights(0)[0] = 1.0;
    q.weights(2)[0] = 1.0;
    const auto d = policy_from_q(q, 1e-6, "g")->action_distribution(std::vector<double>{0.5});
    EXPECT_GT(d[0], 0.99);
    EXPECT_EQ(d[2], 1e-6);
}

TEST(EsSearch, FitnessOfReferenceOnOwnDataIsMeanReturn) {
    grid::GridWorldPlus env;
    const auto spec = grid::default_spec();
    auto u = TabularPolicy::uniform("u", grid::kNumStates, grid::kNumActions);
    PolicyRegistry reg;
    reg.add(u);
    Rng rng(6);
    TrajectorySet data;
    double mean = 0.0;
    for (int i = 0; i < 100; ++i) {
        data.push_back(generate_trajectory(env, *u, rng, spec));
        mean += normalized_return(data.back(), spec) / 100.0;
    }
    IsObjective objective(data, reg, spec, grid::kNumStates, grid::kNumActions);
    const auto params = TabularSoftmaxParams::from_policy(*u, grid::kNumStates, 6.0);
    EXPECT_NEAR(objective(params), mean, 1e-12);
}

TEST(EsSearch, SeededOptimumNeverLost) {
    grid::GridWorldPlus env;
    const auto spec = grid::default_spec();
    auto behavior = softened_optimal();
    PolicyRegistry reg;
    reg.add(behavior);
    Rng rng(7);
    TrajectorySet data;
    for (int i = 0; i < 50; ++i) data.push_back(generate_trajectory(env, *behavior, rng, spec));
    IsObjective objective(data, reg, spec, grid::kNumStates, grid::kNumActions);
    auto u = TabularPolicy::uniform("u", grid::kNumStates, grid::kNumActions);
    const std::vector<TabularSoftmaxParams> seeds{TabularSoftmaxParams::from_policy(*behavior, grid::kNumStates, 6.0)};
    const double seeded = objective(seeds.front());
    EsConfig config;
    config.generations = 5;
    const auto result = es_policy_search(objective, *u, grid::kNumStates, config, rng, "es", seeds);
    EXPECT_GE(result.fitness, seeded);
}

class EsModes : public ::testing::TestWithParam<bool> {};

TEST_P(EsModes, FitnessTraceNonDecreasing) {
    grid::GridWorldPlus env;
    const auto spec = grid::default_spec();
    auto u = TabularPolicy::uniform("u", grid::kNumStates, grid::kNumActions);
    PolicyRegistry reg;
    reg.add(u);
    Rng rng(8);
    TrajectorySet data;
    for (int i = 0; i < 60; ++i) data.push_back(generate_trajectory(env, *u, rng, spec));
    IsObjective objective(data, reg, spec, grid::kNumStates, grid::kNumActions, u.get(), 0.3);
    EsConfig config;
    config.gradient_step = GetParam();
    const auto result = es_policy_search(objective, *u, grid::kNumStates, config, rng, "es");
    ASSERT_EQ(result.fitness_trace.size(), static_cast<std::size_t>(config.generations + 1));
    for (std::size_t i = 1; i < result.fitness_trace.size(); ++i) {
        EXPECT_GE(result.fitness_trace[i], result.fitness_trace[i - 1]);
    }
    EXPECT_EQ(result.fitness, result.fitness_trace.back());
    EXPECT_NEAR(objective(result.policy->params()), result.fitness, 1e-12);
}

TEST_P(EsModes, BeatsBehaviorOnLargeBatch) {
    grid::GridWorldPlus env;
    const auto spec = grid::default_spec();
    auto u = TabularPolicy::uniform("u", grid::kNumStates, grid::kNumActions);
    const std::vector<int> right(grid::kNumStates, grid::kRight);
    auto behavior = mix_policies(u, TabularPolicy::deterministic("r", right, grid::kNumActions), 0.5, "beh");
    PolicyRegistry reg;
    reg.add(behavior);
    const double behavior_value = grid::exact_value(*behavior, spec);
    for (std::uint64_t seed : {1, 2, 3}) {
        Rng rng(seed);
        TrajectorySet data;
        for (int i = 0; i < 2000; ++i) data.push_back(generate_trajectory(env, *behavior, rng, spec));
        IsObjective objective(data, reg, spec, grid::kNumStates, grid::kNumActions);
        EsConfig config;
        if (GetParam()) {
            config.gradient_step = true;
            config.generations = 10;
            config.bound_width = 6.0;
            objective.set_bound_penalty(config.bound_delta, 4 * data.size(), config.bound_width);
        }
        const auto result = es_policy_search(objective, *behavior, grid::kNumStates, config, rng, "es");
        EXPECT_GE(grid::exact_value(*result.policy, spec), behavior_value) << "seed " << seed;
    }
}

INSTANTIATE_TEST_SUITE_P(Both, EsModes, ::testing::Bool());

TEST(EsSearch, PreferencesStayBounded) {
    grid::GridWorldPlus env;
    const auto spec = grid::default_spec();
    auto u = TabularPolicy::uniform("u", grid::kNumStates, grid::kNumActions);
    PolicyRegistry reg;
    reg.add(u);
    Rng rng(9);
    TrajectorySet data;
    for (int i = 0; i < 40; ++i) data.push_back(generate_trajectory(env, *u, rng, spec));
    IsObjective objective(data, reg, spec, grid::kNumStates, grid::kNumActions);
    EsConfig config;
    const auto result = es_policy_search(objective, *u, grid::kNumStates, config, rng, "es");
    for (double p : result.policy->params().preferences) EXPECT_LE(std::abs(p), config.preference_bound);
    for (int s = 0; s < grid::kNumStates; ++s) {
        for (double p : result.policy->action_distribution(std::vector<double>{double(s)})) EXPECT_GE(p, 1e-6);
    }
}

TEST(GenCandidates, SingleCandidateUsesFullData) {
    const auto data = tagged({4, 4});
    RecordingLearner learner;
    auto u = TabularPolicy::uniform("u", 1, 2);
    Rng rng(10);
    const auto cands = gen_candidate_policies(data, 1, learner, u, 0.3, rng, "i1/");
    ASSERT_EQ(cands.size(), 1u);
    EXPECT_FALSE(cands[0].bootstrapped);
    ASSERT_EQ(learner.seen.size(), 1u);
    std::vector<std::int64_t> all;
    for (const auto& t : data) all.push_back(t.traj_id);
    EXPECT_EQ(learner.seen[0], all);
    EXPECT_EQ(cands[0].policy->id(), "i1/c1");
    EXPECT_EQ(cands[0].policy->alpha(), 0.3);
    EXPECT_EQ(cands[0].policy->base(), u);
}

TEST(GenCandidates, LaterCandidatesBootstrapped) {
    const auto data = tagged({6, 6, 6});
    RecordingLearner learner;
    auto u = TabularPolicy::uniform("u", 1, 2);
    Rng rng(11);
    const auto cands = gen_candidate_policies(data, 5, learner, u, 0.3, rng, "");
    ASSERT_EQ(cands.size(), 5u);
    std::set<std::vector<std::int64_t>> resamples;
    for (std::size_t k = 1; k < 5; ++k) {
        EXPECT_TRUE(cands[k].bootstrapped);
        EXPECT_EQ(learner.seen[k].size(), data.size());
        resamples.insert(learner.seen[k]);
    }
    EXPECT_EQ(resamples.size(), 4u);
}

TEST(GenCandidates, DistinctAndReproducibleWithEs) {
    grid::GridWorldPlus env;
    const auto spec = grid::default_spec();
    auto u = TabularPolicy::uniform("u", grid::kNumStates, grid::kNumActions);
    PolicyRegistry reg;
    reg.add(u);
    Rng data_rng(12);
    TrajectorySet data;
    for (int i = 0; i < 16; ++i) {
        data.push_back(generate_trajectory(env, *u, data_rng, spec));
        data.back().iteration = 1 + i / 8;
        data.back().traj_id = i;
    }
    EsConfig config;
    config.generations = 3;
    EsLearner learner(reg, spec, grid::kNumStates, grid::kNumActions, config);
    Rng a(13);
    Rng b(13);
    const auto first = gen_candidate_policies(data, 5, learner, u, 0.3, a, "");
    const auto second = gen_candidate_policies(data, 5, learner, u, 0.3, b, "");
    std::set<std::vector<double>> tables;
    for (std::size_t k = 0; k < 5; ++k) {
        const auto& p1 = dynamic_cast<const SoftmaxPolicy&>(*first[k].target).params().preferences;
        const auto& p2 = dynamic_cast<const SoftmaxPolicy&>(*second[k].target).params().preferences;
        EXPECT_EQ(p1, p2);
        if (k > 0) tables.insert(p1);
        for (int s = 0; s < grid::kNumStates; ++s) {
            for (double p : first[k].policy->action_distribution(std::vector<double>{double(s)})) EXPECT_GE(p, 1e-6);
        }
    }
    EXPECT_EQ(tables.size(), 4u);
}

TEST(GenCandidates, RejectsZeroCandidates) {
    const auto data = tagged({2});
    RecordingLearner learner;
    auto u = TabularPolicy::uniform("u", 1, 2);
    Rng rng(14);
    EXPECT_THROW(gen_candidate_policies(data, 0, learner, u, 0.3, rng, ""), std::invalid_argument);
}
