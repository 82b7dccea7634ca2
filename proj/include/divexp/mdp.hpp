#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace divexp {

using Rng = std::mt19937_64;

/// A state is a point in R^d. Discrete environments use a single component
/// holding the integer state id.
using State = std::vector<double>;

/// Derives an independent 64-bit seed for a named stream of a run
/// (splitmix64 finalizer over the combined words).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0);

struct MDPSpec {
    double gamma = 1.0;
    int horizon = 100;
    /// Bounds on the discounted reward sum of any trajectory.
    double return_lower = -100.0;
    double return_upper = -3.0;

    void validate() const;
};

struct Transition {
    State state;
    int action = 0;
    double reward = 0.0;
    State next_state;
    bool terminal = false;
};

struct Trajectory {
    std::vector<Transition> transitions;
    /// Id of the policy that generated the trajectory (importance-sampling provenance).
    std::string behavior_id;
    /// Policy-improvement iteration in which the trajectory was collected.
    int iteration = 0;
    std::int64_t traj_id = 0;

    std::size_t size() const { return transitions.size(); }
    void validate(const MDPSpec& spec) const;
};

using TrajectorySet = std::vector<Trajectory>;

/// Stochastic policy: maps a state to a probability distribution over actions.
class Policy {
public:
    virtual ~Policy() = default;

    const std::string& id() const { return id_; }
    virtual int num_actions() const = 0;

    /// Writes the action distribution for `state` into `out` (size num_actions()).
    virtual void distribution(std::span<const double> state, std::span<double> out) const = 0;

    std::vector<double> action_distribution(std::span<const double> state) const;
    double probability(std::span<const double> state, int action) const;

protected:
    explicit Policy(std::string id) : id_(std::move(id)) {}

private:
    std::string id_;
};

using PolicyPtr = std::shared_ptr<const Policy>;

/// Explicit table policy over a discrete state space.
class TabularPolicy final : public Policy {
public:
    /// `table[s][a]`; each row is checked to sum to one within 1e-9 and renormalized.
    TabularPolicy(std::string id, std::vector<std::vector<double>> table);

    static std::shared_ptr<const TabularPolicy> uniform(std::string id, int num_states, int num_actions);
    static std::shared_ptr<const TabularPolicy> deterministic(std::string id, std::span<const int> actions,
                                                              int num_actions);

    int num_actions() const override { return num_actions_; }
    int num_states() const { return static_cast<int>(table_.size()); }
    void distribution(std::span<const double> state, std::span<double> out) const override;
    const std::vector<double>& row(int state) const { return table_.at(state); }

private:
    std::vector<std::vector<double>> table_;
    int num_actions_;
};

/// (1 - alpha) * target + alpha * base.
class MixedPolicy final : public Policy {
public:
    MixedPolicy(std::string id, PolicyPtr base, PolicyPtr target, double alpha);

    int num_actions() const override { return target_->num_actions(); }
    void distribution(std::span<const double> state, std::span<double> out) const override;

    const PolicyPtr& base() const { return base_; }
    const PolicyPtr& target() const { return target_; }
    double alpha() const { return alpha_; }

private:
    PolicyPtr base_;
    PolicyPtr target_;
    double alpha_;
};

std::shared_ptr<const MixedPolicy> mix_policies(PolicyPtr base, PolicyPtr target, double alpha, std::string id);

/// Looks up behavior policies by id when re-weighting logged trajectories.
class PolicyRegistry {
public:
    void add(PolicyPtr policy);
    bool contains(const std::string& id) const { return policies_.count(id) != 0; }
    const Policy& at(const std::string& id) const;
    PolicyPtr find(const std::string& id) const;
    std::size_t size() const { return policies_.size(); }

private:
    std::map<std::string, PolicyPtr> policies_;
};

struct StepResult {
    State next_state;
    double reward = 0.0;
    bool terminal = false;
};

/// Episodic environment as a pure transition function.
class Environment {
public:
    virtual ~Environment() = default;
    virtual int num_actions() const = 0;
    virtual int state_dim() const = 0;
    virtual State reset(Rng& rng) const = 0;
    virtual StepResult step(std::span<const double> state, int action) const = 0;
};

/// Discounted reward sum mapped to [0, 1] by the return bounds in `spec`.
double normalized_return(const Trajectory& trajectory, const MDPSpec& spec);
double discounted_sum(const Trajectory& trajectory, double gamma);

/// Samples an action index from a probability vector using one uniform draw.
int sample_action(std::span<const double> probs, Rng& rng);

/// Rolls out `policy` until a terminal transition or the horizon. When
/// `support_floor` is positive every visited action distribution must have
/// all probabilities at or above it.
Trajectory generate_trajectory(const Environment& env, const Policy& policy, Rng& rng, const MDPSpec& spec,
                               double support_floor = 0.0);

/// Throws unless every probability in `probs` is >= floor and they sum to one within 1e-12.
void check_distribution(std::span<const double> probs, double floor, const std::string& policy_id);

}  // namespace divexp
