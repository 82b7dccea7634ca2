#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "divexp/candidates.hpp"
#include "divexp/mdp.hpp"
#include "divexp/ope.hpp"

namespace divexp {

enum class DomainKind { GridWorld, MountainCar, Acrobot };
enum class Algo { DE, SPI };

std::string to_string(DomainKind domain);
std::string to_string(Algo algo);
DomainKind parse_domain(const std::string& text);
Algo parse_algo(const std::string& text);

struct ExperimentConfig {
    DomainKind domain = DomainKind::GridWorld;
    int iterations = 25;    // d
    int trajectories = 40;  // n, per iteration
    int candidates = 5;     // r
    double delta = 0.05;
    double alpha = 0.3;
    // Fraction of each behavior policy's batch appended to the training set.
    int train_numerator = 1;
    int train_denominator = 5;
    std::uint64_t seed = 0;
    double support_floor = 1e-6;
    EsConfig es;
    FqiConfig fqi;
    int fourier_order = 3;
    /// Episodes used to estimate a confirmed policy's true value where no exact evaluator exists.
    int value_rollouts = 50;

    static ExperimentConfig defaults_for(DomainKind domain);
    void validate() const;
    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct AllocationVector {
    std::vector<int> counts;

    int total() const;
    int min() const;
    int max() const;
    std::size_t size() const { return counts.size(); }
};

/// Equal split of n trajectories over m policies; the n mod m remainder goes
/// one each to the lowest-indexed policies.
AllocationVector allocate(int n, int m);

/// Student-t lower bound over the plain normalized returns of `test`.
double compute_rho_baseline(std::span<const Trajectory> test, const MDPSpec& spec, double delta);

/// Everything the loop needs to know about a domain.
struct Domain {
    DomainKind kind = DomainKind::GridWorld;
    std::shared_ptr<const Environment> env;
    MDPSpec spec;
    PolicyPtr initial_policy;
    int num_states = 0;  // tabular domains only
    std::function<std::unique_ptr<Learner>(const PolicyRegistry&, const ExperimentConfig&)> make_learner;
    /// True expected normalized return (exact where available).
    std::function<double(const Policy&, Rng&)> true_value;
    /// Whether a learned target is an optimal policy; empty when unknown.
    std::function<bool(const Policy&)> is_optimal;
    /// Maps states to cells for the joint-entropy measure.
    std::function<State(std::span<const double>)> discretize;

    static Domain make(const ExperimentConfig& config);
};

struct CandidateOutcome {
    std::string id;
    double mean = 0.0;
    double lower_bound = 0.0;
    double p_value = 1.0;
    bool confirmed = false;
    /// Known only for confirmed candidates.
    double true_value = std::numeric_limits<double>::quiet_NaN();
    bool optimal = false;
};

struct IterationRecord {
    int iteration = 0;
    std::vector<std::string> deployed;
    std::vector<int> counts;
    double rho_baseline = 0.0;
    std::vector<CandidateOutcome> candidates;
    std::vector<std::string> confirmed;
    double mean_return = 0.0;
    double joint_entropy = 0.0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::vector<std::int64_t> train_ids;  // added this iteration
    std::vector<std::int64_t> test_ids;

    int confirmations() const { return static_cast<int>(confirmed.size()); }
};

/// Mutable state carried between iterations of one run.
struct LoopState {
    std::vector<PolicyPtr> deployed;
    /// Mixing base for new candidates: the confirmation with the highest lower bound in the
    /// latest iteration that confirmed anything.
    PolicyPtr reference;
    PolicyRegistry behaviors;
    TrajectorySet train;
    TrajectorySet test;
    std::vector<Candidate> confirmed_history;
    std::int64_t next_traj_id = 0;

    explicit LoopState(PolicyPtr initial);
};

struct IterationRngs {
    Rng& collect;
    Rng& learn;
    Rng& evaluate;
};

/// One pass of the improvement loop: collect, split, baseline, generate, test, redeploy.
IterationRecord run_iteration(LoopState& state, const Domain& domain, const Learner& learner,
                              const ExperimentConfig& config, int candidates, int iteration, IterationRngs rngs);

struct RunResult {
    Algo algo = Algo::DE;
    std::uint64_t seed = 0;
    std::vector<IterationRecord> records;
    /// Every collected trajectory in collection order.
    TrajectorySet trajectories;
    std::vector<Candidate> confirmed;
};

RunResult run_experiment(const ExperimentConfig& config, Algo algo = Algo::DE);
/// run_experiment with r forced to 1.
RunResult run_spi_baseline(const ExperimentConfig& config);

}  // namespace divexp
