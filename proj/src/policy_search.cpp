#include "divexp/policy_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "divexp/ope.hpp"
#include "divexp/student_t.hpp"

namespace divexp {

namespace {

void softmax_rows(const TabularSoftmaxParams& params, std::span<double> out) {
    const int n = params.num_actions;
    for (int s = 0; s < params.num_states; ++s) {
        double hi = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < n; ++a) hi = std::max(hi, params.at(s, a) / params.temperature);
        double sum = 0.0;
        for (int a = 0; a < n; ++a) {
            const double e = std::exp(params.at(s, a) / params.temperature - hi);
            out[static_cast<std::size_t>(s * n + a)] = e;
            sum += e;
        }
        for (int a = 0; a < n; ++a) out[static_cast<std::size_t>(s * n + a)] /= sum;
    }
}

int state_index(const State& s, int num_states) {
    const int id = static_cast<int>(s.at(0));
    if (id < 0 || id >= num_states) throw std::out_of_range("tabular state id out of range");
    return id;
}

}  // namespace

TabularSoftmaxParams::TabularSoftmaxParams(int states, int actions, double temp)
    : num_states(states), num_actions(actions),
      preferences(static_cast<std::size_t>(states * actions), 0.0), temperature(temp) {
    if (states < 1 || actions < 1) throw std::invalid_argument("softmax parameters need states and actions");
    if (!(temp > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
}

TabularSoftmaxParams TabularSoftmaxParams::from_policy(const Policy& policy, int num_states, double bound) {
    TabularSoftmaxParams params(num_states, policy.num_actions());
    for (int s = 0; s < num_states; ++s) {
        const double state = s;
        const auto probs = policy.action_distribution(std::span<const double>(&state, 1));
        double max_log = -std::numeric_limits<double>::infinity();
        for (double p : probs) max_log = std::max(max_log, std::log(p));
        // Shift so the most likely action sits at +bound, then clamp the rest.
        for (int a = 0; a < params.num_actions; ++a) {
            params.at(s, a) = std::clamp(bound + std::log(probs[static_cast<std::size_t>(a)]) - max_log, -bound, bound);
        }
    }
    return params;
}

std::vector<double> TabularSoftmaxParams::probabilities() const {
    std::vector<double> table(preferences.size());
    softmax_rows(*this, table);
    return table;
}

SoftmaxPolicy::SoftmaxPolicy(std::string id, TabularSoftmaxParams params)
    : Policy(std::move(id)), params_(std::move(params)) {
    if (params_.preferences.size() != static_cast<std::size_t>(params_.num_states * params_.num_actions)) {
        throw std::invalid_argument("softmax preference table has the wrong size");
    }
    table_ = params_.probabilities();
}

void SoftmaxPolicy::distribution(std::span<const double> state, std::span<double> out) const {
    if (state.empty()) throw std::invalid_argument("softmax policy queried with an empty state");
    const int s = static_cast<int>(state[0]);
    if (s < 0 || s >= params_.num_states) throw std::out_of_range("softmax policy: state id out of range");
    const auto begin = table_.begin() + static_cast<std::ptrdiff_t>(s * params_.num_actions);
    std::copy(begin, begin + params_.num_actions, out.begin());
}

IsObjective::IsObjective(std::span<const Trajectory> data, const PolicyRegistry& behaviors, const MDPSpec& spec,
                         int num_states, int num_actions, const Policy* mix_base, double mix_alpha)
    : num_states_(num_states), num_actions_(num_actions), mix_alpha_(mix_alpha) {
    if (data.empty()) throw std::invalid_argument("importance-sampled objective needs data");
    if (!(mix_alpha >= 0.0 && mix_alpha <= 1.0)) throw std::invalid_argument("mixing parameter must lie in [0, 1]");
    if (mix_alpha > 0.0 && mix_base == nullptr) throw std::invalid_argument("mixing requires a base policy");
    std::vector<double> q(static_cast<std::size_t>(num_actions));
    for (const auto& traj : data) {
        const Policy& behavior = behaviors.at(traj.behavior_id);
        double log_q = 0.0;
        std::vector<int> pairs;
        pairs.reserve(traj.size());
        for (const auto& tr : traj.transitions) {
            behavior.distribution(tr.state, q);
            const double p = q.at(static_cast<std::size_t>(tr.action));
            if (!(p > 0.0)) throw std::domain_error("behavior policy '" + behavior.id() + "' has zero probability");
            log_q += std::log(p);
            pairs.push_back(state_index(tr.state, num_states) * num_actions + tr.action);
        }
        returns_.push_back(normalized_return(traj, spec));
        behavior_log_prob_.push_back(log_q);
        pairs_.push_back(std::move(pairs));
    }
    if (mix_alpha > 0.0) {
        base_table_.resize(static_cast<std::size_t>(num_states * num_actions));
        for (int s = 0; s < num_states; ++s) {
            const double state = s;
            mix_base->distribution(std::span<const double>(&state, 1),
                                   std::span<double>(base_table_).subspan(static_cast<std::size_t>(s * num_actions),
                                                                          static_cast<std::size_t>(num_actions)));
        }
    }
}

void IsObjective::set_bound_penalty(double delta, std::size_t samples, double width) {
    if (!(width >= 0.0)) throw std::invalid_argument("bound width must be nonnegative");
    if (width == 0.0) {
        penalty_ = 0.0;
        return;
    }
    if (!(delta > 0.0 && delta < 0.5) || samples < 2) {
        throw std::invalid_argument("bound penalty needs delta in (0, 0.5) and at least 2 samples");
    }
    const double n = static_cast<double>(samples);
    penalty_ = width * stats::student_t_quantile(1.0 - delta, n - 1.0) / std::sqrt(n);
}

std::vector<double> IsObjective::weighted_returns(std::span<const double> table) const {
    if (table.size() != static_cast<std::size_t>(num_states_ * num_actions_)) {
        throw std::invalid_argument("probability table has the wrong size");
    }
    std::vector<double> log_table(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        const double p = mix_alpha_ > 0.0 ? (1.0 - mix_alpha_) * table[i] + mix_alpha_ * base_table_[i] : table[i];
        log_table[i] = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    }
    std::vector<double> out(returns_.size(), 0.0);
    for (std::size_t i = 0; i < returns_.size(); ++i) {
        if (returns_[i] == 0.0) continue;
        double log_w = -behavior_log_prob_[i];
        for (int idx : pairs_[i]) log_w += log_table[static_cast<std::size_t>(idx)];
        out[i] = returns_[i] * std::exp(log_w);
    }
    return out;
}

double IsObjective::evaluate_table(std::span<const double> table) const {
    const auto values = weighted_returns(table);
    const auto m = sample_moments(values);
    if (penalty_ == 0.0 || m.n < 2) return m.mean;
    return m.mean - penalty_ * m.stddev;
}

double IsObjective::operator()(const TabularSoftmaxParams& params) const {
    if (params.num_states != num_states_ || params.num_actions != num_actions_) {
        throw std::invalid_argument("softmax parameters do not match the objective's state/action space");
    }
    return evaluate_table(params.probabilities());
}

EsResult es_policy_search(const IsObjective& objective, const Policy& reference, int num_states,
                          const EsConfig& config, Rng& rng, std::string id,
                          std::span<const TabularSoftmaxParams> seeds) {
    if (config.population < 1 || config.generations < 0 || !(config.step_size > 0.0) ||
        !(config.preference_bound > 0.0)) {
        throw std::invalid_argument("invalid evolution strategy configuration");
    }
    struct Member {
        TabularSoftmaxParams params;
        double fitness;
    };
    const auto by_fitness = [](const Member& a, const Member& b) { return a.fitness > b.fitness; };
    const std::size_t mu = static_cast<std::size_t>(std::max(1, config.population / 4));

    std::vector<Member> elite;
    auto start = TabularSoftmaxParams::from_policy(reference, num_states, config.preference_bound);
    std::vector<double> lo(start.preferences.size(), -config.preference_bound);
    std::vector<double> hi(start.preferences.size(), config.preference_bound);
    if (config.trust_radius > 0.0) {
        for (std::size_t i = 0; i < lo.size(); ++i) {
            lo[i] = std::max(lo[i], start.preferences[i] - config.trust_radius);
            hi[i] = std::min(hi[i], start.preferences[i] + config.trust_radius);
        }
    }
    const TabularSoftmaxParams origin = start;
    const double start_fitness = objective(start);
    elite.push_back({std::move(start), start_fitness});
    for (const auto& seed : seeds) elite.push_back({seed, objective(seed)});
    std::stable_sort(elite.begin(), elite.end(), by_fitness);
    if (elite.size() > mu) elite.resize(mu);

    EsResult result;
    result.fitness_trace.push_back(elite.front().fitness);
    std::normal_distribution<double> noise(0.0, 1.0);
    double sigma = config.step_size;
    if (config.gradient_step) {
        // Antithetic pairs estimate an ascent direction at the current centre.
        // Each line-search length is then tried in turn from the latest centre
        // and accepted only if it improves fitness.
        const std::size_t pairs = static_cast<std::size_t>(std::max(1, config.population / 2));
        TabularSoftmaxParams centre = origin;
        double centre_fitness = start_fitness;
        const std::size_t dim = centre.preferences.size();
        std::vector<double> eps(dim);
        std::vector<double> direction(dim);
        for (int g = 0; g < config.generations; ++g) {
            std::fill(direction.begin(), direction.end(), 0.0);
            for (std::size_t i = 0; i < pairs; ++i) {
                for (double& e : eps) e = noise(rng);
                TabularSoftmaxParams plus = centre;
                TabularSoftmaxParams minus = centre;
                for (std::size_t k = 0; k < dim; ++k) {
                    plus.preferences[k] = std::clamp(centre.preferences[k] + sigma * eps[k], lo[k], hi[k]);
                    minus.preferences[k] = std::clamp(centre.preferences[k] - sigma * eps[k], lo[k], hi[k]);
                }
                const double diff = objective(plus) - objective(minus);
                for (std::size_t k = 0; k < dim; ++k) direction[k] += diff * eps[k];
            }
            double scale = 0.0;
            for (double d : direction) scale = std::max(scale, std::abs(d));
            bool moved = false;
            if (!(scale > 0.0) || !std::isfinite(scale)) {
                result.fitness_trace.push_back(elite.front().fitness);
                if (config.adapt_step) sigma *= config.step_shrink;
                continue;
            }
            for (double length : config.line_search) {
                TabularSoftmaxParams next = centre;
                for (std::size_t k = 0; k < dim; ++k) {
                    next.preferences[k] = std::clamp(centre.preferences[k] + length * direction[k] / scale, lo[k], hi[k]);
                }
                const double f = objective(next);
                if (f > centre_fitness) {
                    centre = std::move(next);
                    centre_fitness = f;
                    moved = true;
                }
            }
            if (centre_fitness > elite.front().fitness) elite.insert(elite.begin(), Member{centre, centre_fitness});
            result.fitness_trace.push_back(elite.front().fitness);
            if (!moved && config.adapt_step) sigma *= config.step_shrink;
        }
    } else {
        for (int g = 0; g < config.generations; ++g) {
            const double previous_best = elite.front().fitness;
            std::vector<Member> pool = elite;
            for (int i = 0; i < config.population; ++i) {
                const auto& parent = elite[std::uniform_int_distribution<std::size_t>(0, elite.size() - 1)(rng)];
                TabularSoftmaxParams child = parent.params;
                for (std::size_t k = 0; k < child.preferences.size(); ++k) {
                    double& p = child.preferences[k];
                    p = std::clamp(p + sigma * noise(rng), lo[k], hi[k]);
                }
                const double f = objective(child);
                pool.push_back({std::move(child), f});
            }
            std::stable_sort(pool.begin(), pool.end(), by_fitness);
            pool.resize(std::min(mu, pool.size()));
            elite = std::move(pool);
            result.fitness_trace.push_back(elite.front().fitness);
            if (config.adapt_step) {
                sigma = elite.front().fitness > previous_best ? std::min(sigma * config.step_growth, config.step_size)
                                                              : sigma * config.step_shrink;
            }
        }
    }
    result.fitness = elite.front().fitness;
    result.policy = std::make_shared<const SoftmaxPolicy>(std::move(id), std::move(elite.front().params));
    return result;
}

}  // namespace divexp
