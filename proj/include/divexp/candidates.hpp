#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "divexp/fqi.hpp"
#include "divexp/mdp.hpp"
#include "divexp/policy_search.hpp"

namespace divexp {

/// Stratified bootstrap: each collection-iteration group of size g is
/// replaced by g draws with replacement from that same group. Output keeps
/// the groups in ascending iteration order.
TrajectorySet bootstrap_per_iteration(std::span<const Trajectory> train, Rng& rng);

/// Batch learner producing a target policy (pre-mixing) from training data.
class Learner {
public:
    virtual ~Learner() = default;
    /// `reference` is the policy candidates will be mixed with; `alpha` its weight.
    virtual PolicyPtr learn(std::span<const Trajectory> data, const PolicyPtr& reference, double alpha, Rng& rng,
                            const std::string& id) const = 0;
};

/// Evolution-strategy search over tabular softmax policies maximizing the
/// importance-sampled value of the mixed candidate on the training data.
class EsLearner final : public Learner {
public:
    EsLearner(const PolicyRegistry& behaviors, MDPSpec spec, int num_states, int num_actions, EsConfig config);
    PolicyPtr learn(std::span<const Trajectory> data, const PolicyPtr& reference, double alpha, Rng& rng,
                    const std::string& id) const override;

private:
    const PolicyRegistry& behaviors_;
    MDPSpec spec_;
    int num_states_;
    int num_actions_;
    EsConfig config_;
};

/// Fitted Q-iteration on a Fourier basis, softened to a full-support greedy policy.
class FqiLearner final : public Learner {
public:
    FqiLearner(FourierBasis basis, int num_actions, FqiConfig config, double support_floor);
    PolicyPtr learn(std::span<const Trajectory> data, const PolicyPtr& reference, double alpha, Rng& rng,
                    const std::string& id) const override;

private:
    FourierBasis basis_;
    int num_actions_;
    FqiConfig config_;
    double support_floor_;
};

struct Candidate {
    /// The mixture that is evaluated and possibly deployed.
    std::shared_ptr<const MixedPolicy> policy;
    /// The learned target before mixing.
    PolicyPtr target;
    bool bootstrapped = false;
};

/// r candidates: the first trained on all of `train`, the rest each on an
/// independent per-iteration bootstrap resample; every target is mixed with
/// `reference` at `alpha`. Ids are `<prefix>c<k>` for k = 1..r.
std::vector<Candidate> gen_candidate_policies(std::span<const Trajectory> train, int r, const Learner& learner,
                                              const PolicyPtr& reference, double alpha, Rng& rng,
                                              const std::string& id_prefix);

}  // namespace divexp
