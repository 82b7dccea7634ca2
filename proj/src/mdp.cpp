#include "divexp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace divexp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

int tabular_index(std::span<const double> state, int num_states) {
    if (state.empty()) throw std::invalid_argument("tabular policy queried with an empty state");
    const double raw = state[0];
    const int s = static_cast<int>(raw);
    if (raw != static_cast<double>(s) || s < 0 || s >= num_states) {
        throw std::out_of_range("tabular policy: state id " + std::to_string(raw) + " out of range");
    }
    return s;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index);
}

void MDPSpec::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("MDPSpec: gamma must lie in (0, 1]");
    if (horizon < 1) throw std::invalid_argument("MDPSpec: horizon must be >= 1");
    if (!(return_upper > return_lower)) throw std::invalid_argument("MDPSpec: return_upper must exceed return_lower");
}

void Trajectory::validate(const MDPSpec& spec) const {
    if (transitions.empty()) throw std::invalid_argument("trajectory is empty");
    if (transitions.size() > static_cast<std::size_t>(spec.horizon)) {
        throw std::invalid_argument("trajectory longer than the horizon");
    }
    for (std::size_t t = 0; t < transitions.size(); ++t) {
        if (!std::isfinite(transitions[t].reward)) throw std::invalid_argument("trajectory has a non-finite reward");
        if (t + 1 < transitions.size() && transitions[t].next_state != transitions[t + 1].state) {
            throw std::invalid_argument("trajectory states do not chain at step " + std::to_string(t));
        }
        if (transitions[t].terminal && t + 1 != transitions.size()) {
            throw std::invalid_argument("terminal transition before the end of the trajectory");
        }
    }
}

std::vector<double> Policy::action_distribution(std::span<const double> state) const {
    std::vector<double> out(static_cast<std::size_t>(num_actions()));
    distribution(state, out);
    return out;
}

double Policy::probability(std::span<const double> state, int action) const {
    const auto probs = action_distribution(state);
    if (action < 0 || action >= static_cast<int>(probs.size())) {
        throw std::out_of_range("action " + std::to_string(action) + " out of range for policy " + id());
    }
    return probs[static_cast<std::size_t>(action)];
}

TabularPolicy::TabularPolicy(std::string id, std::vector<std::vector<double>> table)
    : Policy(std::move(id)), table_(std::move(table)) {
    if (table_.empty()) throw std::invalid_argument("tabular policy needs at least one state");
    num_actions_ = static_cast<int>(table_.front().size());
    if (num_actions_ == 0) throw std::invalid_argument("tabular policy needs at least one action");
    for (auto& row : table_) {
        if (static_cast<int>(row.size()) != num_actions_) {
            throw std::invalid_argument("tabular policy rows differ in action count");
        }
        double sum = 0.0;
        for (double p : row) {
            if (!(p >= 0.0)) throw std::invalid_argument("tabular policy has a negative probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("tabular policy row does not sum to one");
        for (double& p : row) p /= sum;
    }
}

std::shared_ptr<const TabularPolicy> TabularPolicy::uniform(std::string id, int num_states, int num_actions) {
    std::vector<std::vector<double>> table(static_cast<std::size_t>(num_states),
                                           std::vector<double>(static_cast<std::size_t>(num_actions),
                                                               1.0 / num_actions));
    return std::make_shared<const TabularPolicy>(std::move(id), std::move(table));
}

std::shared_ptr<const TabularPolicy> TabularPolicy::deterministic(std::string id, std::span<const int> actions,
                                                                  int num_actions) {
    std::vector<std::vector<double>> table;
    table.reserve(actions.size());
    for (int a : actions) {
        if (a < 0 || a >= num_actions) throw std::out_of_range("deterministic policy action out of range");
        std::vector<double> row(static_cast<std::size_t>(num_actions), 0.0);
        row[static_cast<std::size_t>(a)] = 1.0;
        table.push_back(std::move(row));
    }
    return std::make_shared<const TabularPolicy>(std::move(id), std::move(table));
}

void TabularPolicy::distribution(std::span<const double> state, std::span<double> out) const {
    const auto& r = table_[static_cast<std::size_t>(tabular_index(state, num_states()))];
    std::copy(r.begin(), r.end(), out.begin());
}

MixedPolicy::MixedPolicy(std::string id, PolicyPtr base, PolicyPtr target, double alpha)
    : Policy(std::move(id)), base_(std::move(base)), target_(std::move(target)), alpha_(alpha) {
    if (!base_ || !target_) throw std::invalid_argument("mixed policy needs both a base and a target");
    if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) throw std::invalid_argument("mixing parameter must lie in [0, 1]");
    if (base_->num_actions() != target_->num_actions()) {
        throw std::invalid_argument("cannot mix policies with different action spaces (" +
                                    std::to_string(base_->num_actions()) + " vs " +
                                    std::to_string(target_->num_actions()) + ")");
    }
}

void MixedPolicy::distribution(std::span<const double> state, std::span<double> out) const {
    std::vector<double> base_probs(out.size());
    target_->distribution(state, out);
    base_->distribution(state, base_probs);
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = (1.0 - alpha_) * out[a] + alpha_ * base_probs[a];
}

std::shared_ptr<const MixedPolicy> mix_policies(PolicyPtr base, PolicyPtr target, double alpha, std::string id) {
    return std::make_shared<const MixedPolicy>(std::move(id), std::move(base), std::move(target), alpha);
}

void PolicyRegistry::add(PolicyPtr policy) {
    if (!policy) throw std::invalid_argument("cannot register a null policy");
    auto [it, inserted] = policies_.emplace(policy->id(), policy);
    if (!inserted && it->second != policy) {
        throw std::invalid_argument("policy id '" + policy->id() + "' registered twice");
    }
}

const Policy& PolicyRegistry::at(const std::string& id) const {
    auto it = policies_.find(id);
    if (it == policies_.end()) throw std::out_of_range("unknown behavior policy '" + id + "'");
    return *it->second;
}

PolicyPtr PolicyRegistry::find(const std::string& id) const {
    auto it = policies_.find(id);
    return it == policies_.end() ? nullptr : it->second;
}

double discounted_sum(const Trajectory& trajectory, double gamma) {
    double total = 0.0;
    double discount = 1.0;
    for (const auto& tr : trajectory.transitions) {
        total += discount * tr.reward;
        discount *= gamma;
    }
    return total;
}

double normalized_return(const Trajectory& trajectory, const MDPSpec& spec) {
    if (trajectory.transitions.empty()) throw std::invalid_argument("normalized_return: empty trajectory");
    if (!(spec.return_upper > spec.return_lower)) {
        throw std::invalid_argument("normalized_return: return_upper must exceed return_lower");
    }
    constexpr double kClampTolerance = 1e-9;
    const double sum = discounted_sum(trajectory, spec.gamma);
    if (sum < spec.return_lower - kClampTolerance || sum > spec.return_upper + kClampTolerance) {
        std::ostringstream msg;
        msg << "discounted return " << sum << " outside configured bounds [" << spec.return_lower << ", "
            << spec.return_upper << "]";
        throw std::domain_error(msg.str());
    }
    const double r = (sum - spec.return_lower) / (spec.return_upper - spec.return_lower);
    return std::clamp(r, 0.0, 1.0);
}

int sample_action(std::span<const double> probs, Rng& rng) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double cumulative = 0.0;
    int last_positive = -1;
    for (std::size_t a = 0; a < probs.size(); ++a) {
        if (probs[a] <= 0.0) continue;
        cumulative += probs[a];
        last_positive = static_cast<int>(a);
        if (u < cumulative) return last_positive;
    }
    if (last_positive < 0) throw std::invalid_argument("cannot sample from an all-zero distribution");
    return last_positive;
}

void check_distribution(std::span<const double> probs, double floor, const std::string& policy_id) {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= floor)) {
            throw std::domain_error("policy '" + policy_id + "' violates the support floor (probability " +
                                    std::to_string(p) + ")");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw std::domain_error("policy '" + policy_id + "' distribution does not sum to one");
    }
}

Trajectory generate_trajectory(const Environment& env, const Policy& policy, Rng& rng, const MDPSpec& spec,
                               double support_floor) {
    if (policy.num_actions() != env.num_actions()) {
        throw std::invalid_argument("policy and environment disagree on the action count");
    }
    Trajectory traj;
    traj.behavior_id = policy.id();
    std::vector<double> probs(static_cast<std::size_t>(env.num_actions()));
    State state = env.reset(rng);
    for (int t = 0; t < spec.horizon; ++t) {
        policy.distribution(state, probs);
        if (support_floor > 0.0) check_distribution(probs, support_floor, policy.id());
        const int action = sample_action(probs, rng);
        StepResult step = env.step(state, action);
        traj.transitions.push_back({state, action, step.reward, step.next_state, step.terminal});
        if (step.terminal) break;
        state = std::move(step.next_state);
    }
    return traj;
}

}  // namespace divexp
