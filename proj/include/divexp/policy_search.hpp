#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "divexp/mdp.hpp"

namespace divexp {

/// One real preference per (state, action); pi(a|s) = softmax_a(pref[s][a] / temperature).
struct TabularSoftmaxParams {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> preferences;  // row-major [state][action]
    double temperature = 1.0;

    TabularSoftmaxParams() = default;
    TabularSoftmaxParams(int states, int actions, double temp = 1.0);

    double& at(int s, int a) { return preferences[static_cast<std::size_t>(s * num_actions + a)]; }
    double at(int s, int a) const { return preferences[static_cast<std::size_t>(s * num_actions + a)]; }

    /// Preferences set to log pi(a|s) of a tabular-state policy.
    static TabularSoftmaxParams from_policy(const Policy& policy, int num_states, double bound);

    /// Probability table [state][action].
    std::vector<double> probabilities() const;
};

class SoftmaxPolicy final : public Policy {
public:
    SoftmaxPolicy(std::string id, TabularSoftmaxParams params);

    int num_actions() const override { return params_.num_actions; }
    void distribution(std::span<const double> state, std::span<double> out) const override;
    const TabularSoftmaxParams& params() const { return params_; }

private:
    TabularSoftmaxParams params_;
    std::vector<double> table_;
};

/// Importance-sampled estimate of a tabular policy's value on a fixed batch.
/// Behavior log-probabilities and normalized returns are cached on
/// construction, so each evaluation only touches the logged (s, a) pairs.
/// When `mix_alpha` > 0 the evaluated policy is the mixture
/// (1 - mix_alpha) * softmax(theta) + mix_alpha * mix_base.
class IsObjective {
public:
    IsObjective(std::span<const Trajectory> data, const PolicyRegistry& behaviors, const MDPSpec& spec,
                int num_states, int num_actions, const Policy* mix_base = nullptr, double mix_alpha = 0.0);

    /// Penalize the mean by `width` times the Student-t half-width a held-out
    /// set of `samples` draws with the same spread would give at level delta.
    /// width = 0 restores the plain mean.
    void set_bound_penalty(double delta, std::size_t samples, double width);

    double operator()(const TabularSoftmaxParams& params) const;
    /// Fitness of an arbitrary probability table.
    double evaluate_table(std::span<const double> table) const;
    /// Importance weighted return of each trajectory.
    std::vector<double> weighted_returns(std::span<const double> table) const;
    std::size_t size() const { return returns_.size(); }

private:
    int num_states_;
    int num_actions_;
    std::vector<double> returns_;
    std::vector<double> behavior_log_prob_;
    std::vector<std::vector<int>> pairs_;  // flattened s * |A| + a per step
    std::vector<double> base_table_;
    double mix_alpha_;
    double penalty_ = 0.0;  // width * t quantile / sqrt(samples)
};

struct EsConfig {
    int population = 20;
    int generations = 30;
    double step_size = 0.5;
    /// Shrink the step after a generation without improvement and grow it
    /// (up to step_size) after one with improvement.
    bool adapt_step = true;
    /// Replace mutation with an antithetic gradient estimate at the current
    /// point followed by a line search over `line_search` multiples of step.
    bool gradient_step = false;
    std::vector<double> line_search = {0.25, 0.5, 1.0, 2.0, 4.0};
    /// Each preference stays within this distance of its starting value; 0 disables.
    double trust_radius = 0.0;
    double step_growth = 1.5;
    double step_shrink = 0.7;
    /// Preferences are clamped to [-bound, bound]; with 5 actions this keeps
    /// every softmax probability above 1e-6.
    double preference_bound = 6.0;
    /// Fitness is mean - width * t_{1-delta} * s / sqrt(test_ratio * |D|);
    /// width 0 gives the plain importance-sampled mean.
    double bound_width = 0.0;
    double bound_delta = 0.05;
    double test_ratio = 4.0;

    friend bool operator==(const EsConfig&, const EsConfig&) = default;
};

struct EsResult {
    std::shared_ptr<const SoftmaxPolicy> policy;
    double fitness = 0.0;
    /// Best fitness after initialization and after each generation.
    std::vector<double> fitness_trace;
};

/// Elitist (mu + lambda) evolution strategy over softmax preferences,
/// maximizing `objective`. The search starts from `reference`'s log
/// probabilities plus any `seeds`; mu = max(1, population / 4) and each
/// generation draws `population` Gaussian offspring from the elite.
/// With `gradient_step` each generation instead spends the population on
/// population / 2 antithetic pairs around the incumbent and moves along the
/// estimated ascent direction if some line-search length improves fitness.
EsResult es_policy_search(const IsObjective& objective, const Policy& reference, int num_states,
                          const EsConfig& config, Rng& rng, std::string id,
                          std::span<const TabularSoftmaxParams> seeds = {});

}  // namespace divexp
