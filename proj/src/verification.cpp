#include "divexp/verification.hpp"

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "divexp/gridworld.hpp"
#include "divexp/mdp.hpp"
#include "divexp/ope.hpp"

namespace divexp {

UnbiasednessCheck grid_is_unbiasedness(std::size_t samples, std::uint64_t seed) {
    const MDPSpec spec = grid::default_spec();
    const grid::GridWorldPlus env;
    std::array<int, grid::kNumStates> greedy{};
    const auto optimal = grid::optimal_actions();
    for (int s = 0; s < grid::kNumStates; ++s) greedy[s] = optimal[s].empty() ? 0 : optimal[s].front();
    PolicyPtr uniform = TabularPolicy::uniform("uniform", grid::kNumStates, grid::kNumActions);
    PolicyPtr opt = TabularPolicy::deterministic("optimal", greedy, grid::kNumActions);
    PolicyPtr behavior = mix_policies(uniform, opt, 0.5, "behavior");
    PolicyPtr target = mix_policies(uniform, opt, 0.3, "target");
    PolicyRegistry registry;
    registry.add(behavior);

    Rng rng(seed);
    UnbiasednessCheck out;
    out.samples = samples;
    out.exact = grid::exact_value(*target, spec);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const Trajectory t = generate_trajectory(env, *behavior, rng, spec);
        const double x = normalized_return(t, spec) * importance_weight(t, *target, *behavior);
        const double d = x - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (x - mean);
    }
    out.mean = mean;
    if (samples > 1) out.standard_error = std::sqrt(m2 / static_cast<double>(samples - 1) / samples);
    return out;
}

CoverageCheck t_bound_coverage(double a, double b, std::size_t n, std::size_t trials, double delta,
                               std::uint64_t seed) {
    Rng rng(seed);
    std::gamma_distribution<double> ga(a, 1.0);
    std::gamma_distribution<double> gb(b, 1.0);
    CoverageCheck out;
    out.trials = trials;
    out.true_mean = a / (a + b);
    std::vector<double> xs(n);
    for (std::size_t k = 0; k < trials; ++k) {
        for (auto& x : xs) {
            const double u = ga(rng);
            x = u / (u + gb(rng));
        }
        if (t_lower_bound(xs, delta) > out.true_mean) ++out.violations;
    }
    return out;
}

FdrCheck bh_fdr_simulation(int true_nulls, int false_nulls, std::size_t samples, double effect,
                           std::size_t trials, double delta, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double rho = 0.0;
    FdrCheck out;
    out.trials = trials;
    std::vector<double> xs(samples);
    std::vector<std::pair<std::string, double>> p(static_cast<std::size_t>(true_nulls + false_nulls));
    for (std::size_t k = 0; k < trials; ++k) {
        for (int c = 0; c < true_nulls + false_nulls; ++c) {
            const double mu = c < true_nulls ? rho : rho + effect;
            for (auto& x : xs) x = mu + noise(rng);
            p[c] = {(c < true_nulls ? "null" : "alt") + std::to_string(c), t_p_value(xs, rho)};
        }
        const auto selected = bh_select(p, delta);
        int false_disc = 0;
        for (const auto& id : selected) false_disc += id.rfind("null", 0) == 0;
        const int true_disc = static_cast<int>(selected.size()) - false_disc;
        if (!selected.empty()) out.mean_fdp += static_cast<double>(false_disc) / selected.size();
        if (false_nulls > 0) out.mean_power += static_cast<double>(true_disc) / false_nulls;
    }
    out.mean_fdp /= static_cast<double>(trials);
    out.mean_power /= static_cast<double>(trials);
    return out;
}

}  // namespace divexp
