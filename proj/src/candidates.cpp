#include "divexp/candidates.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace divexp {

TrajectorySet bootstrap_per_iteration(std::span<const Trajectory> train, Rng& rng) {
    std::map<int, std::vector<const Trajectory*>> groups;
    for (const auto& traj : train) groups[traj.iteration].push_back(&traj);
    TrajectorySet out;
    out.reserve(train.size());
    for (const auto& [iteration, group] : groups) {
        if (group.empty()) throw std::invalid_argument("empty bootstrap group for iteration " + std::to_string(iteration));
        std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
        for (std::size_t i = 0; i < group.size(); ++i) out.push_back(*group[pick(rng)]);
    }
    return out;
}

EsLearner::EsLearner(const PolicyRegistry& behaviors, MDPSpec spec, int num_states, int num_actions,
                     EsConfig config)
    : behaviors_(behaviors), spec_(spec), num_states_(num_states), num_actions_(num_actions), config_(config) {}

PolicyPtr EsLearner::learn(std::span<const Trajectory> data, const PolicyPtr& reference, double alpha, Rng& rng,
                           const std::string& id) const {
    IsObjective objective(data, behaviors_, spec_, num_states_, num_actions_, reference.get(), alpha);
    const auto held_out = static_cast<std::size_t>(config_.test_ratio * static_cast<double>(data.size()));
    objective.set_bound_penalty(config_.bound_delta, std::max<std::size_t>(held_out, 2), config_.bound_width);
    return es_policy_search(objective, *reference, num_states_, config_, rng, id).policy;
}

FqiLearner::FqiLearner(FourierBasis basis, int num_actions, FqiConfig config, double support_floor)
    : basis_(std::move(basis)), num_actions_(num_actions), config_(config), support_floor_(support_floor) {}

PolicyPtr FqiLearner::learn(std::span<const Trajectory> data, const PolicyPtr&, double, Rng&,
                            const std::string& id) const {
    return policy_from_q(fqi_learn(data, basis_, num_actions_, config_), support_floor_, id);
}

std::vector<Candidate> gen_candidate_policies(std::span<const Trajectory> train, int r, const Learner& learner,
                                              const PolicyPtr& reference, double alpha, Rng& rng,
                                              const std::string& id_prefix) {
    if (r < 1) throw std::invalid_argument("need at least one candidate");
    if (train.empty()) throw std::invalid_argument("no training trajectories");
    std::vector<Candidate> out;
    out.reserve(static_cast<std::size_t>(r));
    for (int k = 1; k <= r; ++k) {
        const std::string id = id_prefix + "c" + std::to_string(k);
        Candidate c;
        c.bootstrapped = k > 1;
        if (c.bootstrapped) {
            const TrajectorySet resample = bootstrap_per_iteration(train, rng);
            c.target = learner.learn(resample, reference, alpha, rng, id + "/target");
        } else {
            c.target = learner.learn(train, reference, alpha, rng, id + "/target");
        }
        c.policy = mix_policies(reference, c.target, alpha, id);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace divexp
