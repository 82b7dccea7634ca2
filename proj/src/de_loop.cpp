#include "divexp/de_loop.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "divexp/control.hpp"
#include "divexp/gridworld.hpp"
#include "divexp/theory.hpp"

namespace divexp {

std::string to_string(DomainKind domain) {
    switch (domain) {
        case DomainKind::GridWorld: return "gridworld";
        case DomainKind::MountainCar: return "mountaincar";
        case DomainKind::Acrobot: return "acrobot";
    }
    return "unknown";
}

std::string to_string(Algo algo) { return algo == Algo::DE ? "de" : "spi"; }

DomainKind parse_domain(const std::string& text) {
    if (text == "gridworld") return DomainKind::GridWorld;
    if (text == "mountaincar") return DomainKind::MountainCar;
    if (text == "acrobot") return DomainKind::Acrobot;
    throw std::invalid_argument("unknown domain '" + text + "'");
}

Algo parse_algo(const std::string& text) {
    if (text == "de") return Algo::DE;
    if (text == "spi") return Algo::SPI;
    throw std::invalid_argument("unknown algorithm '" + text + "'");
}

ExperimentConfig ExperimentConfig::defaults_for(DomainKind domain) {
    ExperimentConfig cfg;
    cfg.domain = domain;
    if (domain != DomainKind::GridWorld) {
        cfg.alpha = 0.9;
    } else {
        // Plain elitist search overfits the small training split; a gradient
        // step scored by a predicted lower bound stays certifiable.
        cfg.es.gradient_step = true;
        cfg.es.generations = 10;
        cfg.es.bound_width = 6.0;
    }
    return cfg;
}

void ExperimentConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (candidates < 1) throw std::invalid_argument("candidates must be >= 1");
    if (trajectories < candidates) throw std::invalid_argument("trajectories must be >= candidates");
    if (!(delta > 0.0 && delta < 0.5)) throw std::invalid_argument("delta must lie in (0, 0.5)");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    if (train_denominator < 1 || train_numerator < 1 || train_numerator >= train_denominator) {
        throw std::invalid_argument("train split must be a fraction strictly between 0 and 1");
    }
    if (!(support_floor > 0.0 && support_floor < 0.2)) throw std::invalid_argument("support_floor out of range");
    if (es.population < 1 || es.generations < 0 || !(es.step_size > 0.0)) {
        throw std::invalid_argument("invalid evolution strategy settings");
    }
    if (fqi.iterations < 0 || !(fqi.gamma > 0.0 && fqi.gamma <= 1.0) || !(fqi.ridge > 0.0)) {
        throw std::invalid_argument("invalid FQI settings");
    }
    if (fourier_order < 0) throw std::invalid_argument("fourier_order must be >= 0");
    if (value_rollouts < 1) throw std::invalid_argument("value_rollouts must be >= 1");
}

int AllocationVector::total() const {
    int sum = 0;
    for (int k : counts) sum += k;
    return sum;
}

int AllocationVector::min() const { return counts.empty() ? 0 : *std::min_element(counts.begin(), counts.end()); }
int AllocationVector::max() const { return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end()); }

AllocationVector allocate(int n, int m) {
    if (m < 1) throw std::invalid_argument("allocate: need at least one policy");
    if (m > n) {
        throw std::invalid_argument("allocate: " + std::to_string(m) + " policies cannot share " + std::to_string(n) +
                                    " trajectories");
    }
    AllocationVector k;
    k.counts.assign(static_cast<std::size_t>(m), n / m);
    for (int i = 0; i < n % m; ++i) ++k.counts[static_cast<std::size_t>(i)];
    return k;
}

double compute_rho_baseline(std::span<const Trajectory> test, const MDPSpec& spec, double delta) {
    if (test.size() < 2) throw std::invalid_argument("baseline needs at least two test trajectories");
    std::vector<double> returns;
    returns.reserve(test.size());
    for (const auto& traj : test) returns.push_back(normalized_return(traj, spec));
    return t_lower_bound(returns, delta);
}

namespace {

double rollout_value(const Environment& env, const MDPSpec& spec, const Policy& policy, int episodes, Rng& rng) {
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) total += normalized_return(generate_trajectory(env, policy, rng, spec), spec);
    return total / episodes;
}

Domain make_grid_domain() {
    Domain d;
    d.kind = DomainKind::GridWorld;
    d.env = std::make_shared<grid::GridWorldPlus>();
    d.spec = grid::default_spec();
    d.num_states = grid::kNumStates;
    d.initial_policy = TabularPolicy::uniform("pi0", grid::kNumStates, grid::kNumActions);
    d.make_learner = [spec = d.spec](const PolicyRegistry& behaviors, const ExperimentConfig& cfg) {
        return std::make_unique<EsLearner>(behaviors, spec, grid::kNumStates, grid::kNumActions, cfg.es);
    };
    d.true_value = [spec = d.spec](const Policy& p, Rng&) { return grid::exact_value(p, spec); };
    d.is_optimal = [](const Policy& target) {
        const auto greedy = grid::greedy_actions(target);
        std::array<int, grid::kNumInterior> interior{};
        for (int i = 0; i < grid::kNumInterior; ++i) interior[i] = greedy[grid::interior_states()[i]];
        return grid::is_optimal_interior(interior);
    };
    d.discretize = [](std::span<const double> s) { return State(s.begin(), s.end()); };
    return d;
}

Domain make_control_domain(DomainKind kind, const ExperimentConfig& config) {
    Domain d;
    d.kind = kind;
    std::pair<std::vector<double>, std::vector<double>> bounds;
    if (kind == DomainKind::MountainCar) {
        d.env = std::make_shared<control::MountainCar>();
        d.spec = control::mountain_car_spec();
        bounds = control::mountain_car_bounds();
    } else {
        d.env = std::make_shared<control::Acrobot>();
        d.spec = control::acrobot_spec();
        bounds = control::acrobot_bounds();
    }
    // Uniform start policy over continuous states.
    struct Uniform final : Policy {
        explicit Uniform(int n) : Policy("pi0"), n_(n) {}
        int num_actions() const override { return n_; }
        void distribution(std::span<const double>, std::span<double> out) const override {
            std::fill(out.begin(), out.end(), 1.0 / n_);
        }
        int n_;
    };
    d.initial_policy = std::make_shared<const Uniform>(d.env->num_actions());
    const FourierBasis basis(config.fourier_order, bounds.first, bounds.second);
    d.make_learner = [basis, num_actions = d.env->num_actions()](const PolicyRegistry&,
                                                                  const ExperimentConfig& cfg) {
        return std::make_unique<FqiLearner>(basis, num_actions, cfg.fqi, cfg.support_floor);
    };
    d.true_value = [env = d.env, spec = d.spec, episodes = config.value_rollouts](const Policy& p, Rng& rng) {
        return rollout_value(*env, spec, p, episodes, rng);
    };
    // Ten equal-width cells per state dimension for the visit distribution.
    d.discretize = [lo = bounds.first, hi = bounds.second](std::span<const double> s) {
        State cell(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double u = std::clamp((s[i] - lo[i]) / (hi[i] - lo[i]), 0.0, 1.0);
            cell[i] = std::min(9.0, std::floor(u * 10.0));
        }
        return cell;
    };
    return d;
}

}  // namespace

Domain Domain::make(const ExperimentConfig& config) {
    if (config.domain == DomainKind::GridWorld) return make_grid_domain();
    return make_control_domain(config.domain, config);
}

LoopState::LoopState(PolicyPtr initial) : deployed{initial}, reference(initial) { behaviors.add(initial); }

IterationRecord run_iteration(LoopState& state, const Domain& domain, const Learner& learner,
                              const ExperimentConfig& config, int candidates, int iteration, IterationRngs rngs) {
    if (state.deployed.empty()) throw std::invalid_argument("run_iteration: no deployed policies");
    IterationRecord rec;
    rec.iteration = iteration;
    const AllocationVector alloc = allocate(config.trajectories, static_cast<int>(state.deployed.size()));
    rec.counts = alloc.counts;

    TrajectorySet collected;
    double return_sum = 0.0;
    for (std::size_t i = 0; i < state.deployed.size(); ++i) {
        const Policy& policy = *state.deployed[i];
        rec.deployed.push_back(policy.id());
        const int count = alloc.counts[i];
        const int to_train = count * config.train_numerator / config.train_denominator;
        for (int k = 0; k < count; ++k) {
            Trajectory traj =
                generate_trajectory(*domain.env, policy, rngs.collect, domain.spec, config.support_floor);
            traj.iteration = iteration;
            traj.traj_id = state.next_traj_id++;
            return_sum += normalized_return(traj, domain.spec);
            if (k < to_train) {
                rec.train_ids.push_back(traj.traj_id);
                state.train.push_back(traj);
            } else {
                rec.test_ids.push_back(traj.traj_id);
                state.test.push_back(traj);
            }
            collected.push_back(std::move(traj));
        }
    }
    rec.mean_return = return_sum / static_cast<double>(config.trajectories);
    rec.joint_entropy = theory::joint_entropy(collected, domain.discretize);
    rec.train_size = state.train.size();
    rec.test_size = state.test.size();
    if (state.train.empty()) throw std::runtime_error("training set is empty; increase trajectories per iteration");

    rec.rho_baseline = compute_rho_baseline(state.test, domain.spec, config.delta);

    const std::string prefix = "j" + std::to_string(iteration);
    auto cands = gen_candidate_policies(state.train, candidates, learner, state.reference, config.alpha, rngs.learn,
                                        prefix);
    std::vector<PolicyPtr> policies;
    for (const auto& c : cands) policies.push_back(c.policy);
    const SafetyTestReport report =
        safety_test(policies, state.test, state.behaviors, domain.spec, config.delta, rec.rho_baseline);

    std::vector<PolicyPtr> passed;
    double best_bound = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const auto& test = report.candidates[i];
        CandidateOutcome out{test.id, test.mean, test.lower_bound, test.p_value, report.is_confirmed(test.id)};
        if (out.confirmed) {
            out.true_value = domain.true_value(*cands[i].policy, rngs.evaluate);
            out.optimal = domain.is_optimal && domain.is_optimal(*cands[i].target);
            rec.confirmed.push_back(test.id);
            passed.push_back(cands[i].policy);
            state.behaviors.add(cands[i].policy);
            state.confirmed_history.push_back(cands[i]);
            if (test.lower_bound > best_bound) {
                best_bound = test.lower_bound;
                state.reference = cands[i].policy;
            }
        }
        rec.candidates.push_back(std::move(out));
    }
    if (!passed.empty()) state.deployed = std::move(passed);
    return rec;
}

RunResult run_experiment(const ExperimentConfig& config, Algo algo) {
    config.validate();
    const Domain domain = Domain::make(config);
    LoopState state(domain.initial_policy);
    const auto learner = domain.make_learner(state.behaviors, config);
    const int candidates = algo == Algo::SPI ? 1 : config.candidates;

    RunResult result;
    result.algo = algo;
    result.seed = config.seed;
    Rng collect(derive_seed(config.seed, 1));
    for (int j = 1; j <= config.iterations; ++j) {
        Rng learn(derive_seed(config.seed, 2, static_cast<std::uint64_t>(j)));
        Rng evaluate(derive_seed(config.seed, 3, static_cast<std::uint64_t>(j)));
        try {
            result.records.push_back(
                run_iteration(state, domain, *learner, config, candidates, j, {collect, learn, evaluate}));
        } catch (const std::exception& e) {
            throw std::runtime_error("iteration " + std::to_string(j) + " of " + to_string(algo) + " run " +
                                     std::to_string(config.seed) + " failed: " + e.what());
        }
    }
    result.trajectories.reserve(state.train.size() + state.test.size());
    result.trajectories.insert(result.trajectories.end(), state.train.begin(), state.train.end());
    result.trajectories.insert(result.trajectories.end(), state.test.begin(), state.test.end());
    std::sort(result.trajectories.begin(), result.trajectories.end(),
              [](const Trajectory& a, const Trajectory& b) { return a.traj_id < b.traj_id; });
    result.confirmed = std::move(state.confirmed_history);
    return result;
}

RunResult run_spi_baseline(const ExperimentConfig& config) { return run_experiment(config, Algo::SPI); }

}  // namespace divexp
