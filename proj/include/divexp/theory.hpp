#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "divexp/mdp.hpp"

namespace divexp::theory {

/// Target densities p_j and proposal densities q_t over a common finite
/// support, with payoff f(x) per support point.
struct DensityPair {
    std::vector<std::vector<double>> targets;    // r x |support|
    std::vector<std::vector<double>> proposals;  // m x |support|
    std::vector<double> payoff;                  // |support|

    void validate() const;
    std::size_t support_size() const { return payoff.size(); }
};

/// variances[j][t] = var(X_{j,t}) for X_{j,t} = p_j(x) f(x) / q_t(x), x ~ q_t.
struct VarianceProfile {
    std::vector<std::vector<double>> variances;

    std::size_t targets() const { return variances.size(); }
    std::size_t proposals() const { return variances.empty() ? 0 : variances.front().size(); }
    void validate() const;
};

/// Closed form over the finite support: sum_x q(x) (p(x) f(x) / q(x))^2 - mu^2.
VarianceProfile analytic_profile(const DensityPair& densities);

/// Sample variance of `samples` draws of X_{j,t}.
double monte_carlo_variance(const DensityPair& densities, std::size_t j, std::size_t t, std::size_t samples,
                            Rng& rng);

/// Random strictly positive densities and payoffs; support of `support` points.
DensityPair random_densities(std::size_t targets, std::size_t proposals, std::size_t support, Rng& rng);

using Allocation = std::vector<int>;

double single_is_variance(const VarianceProfile& v, std::size_t j, std::size_t t, int n);
double multi_is_variance(const VarianceProfile& v, std::size_t j, const Allocation& k, int n);
/// Mean absolute deviation of the per-target multiple-IS variances.
double uniformity_objective(const VarianceProfile& v, const Allocation& k, int n);

int l1_distance(const Allocation& a, const Allocation& b);
/// 2 * sum(k) - 2 * min(k).
int max_l1_bound(const Allocation& k);

/// All weak compositions of n into m nonnegative parts, lexicographic order.
std::vector<Allocation> compositions(int n, int m);
/// max over every composition y of |y - k|_1, by enumeration.
int max_l1_distance_bruteforce(const Allocation& k);

Allocation equal_allocation(int n, int m);  // requires m | n
Allocation single_allocation(int n, int m, int t);

/// All minimizers of the uniformity objective over integer compositions.
std::vector<Allocation> optimal_allocations(const VarianceProfile& v, int n, double tolerance = 1e-15);

struct DistanceBoundReport {
    std::size_t instances = 0;
    std::size_t violations = 0;
};
/// Every composition of every n in [1, max_n] into m in [1, max_m] parts.
DistanceBoundReport verify_distance_bound(int max_n, int max_m);

struct EqualAllocationReport {
    std::size_t profiles = 0;
    std::size_t minimizers_checked = 0;
    std::size_t violations = 0;
    /// Count of minimizers whose E_t |k^(t) - k*|_1 differed from 2n - 2n/m.
    std::size_t expectation_mismatches = 0;
};
EqualAllocationReport verify_equal_allocation(const VarianceProfile& v, int n);
EqualAllocationReport verify_equal_allocation_random(int n, int m, std::size_t targets, std::size_t profiles, Rng& rng);

/// (average variance under k^DE, average over t of average variance under k^(t)).
std::pair<double, double> compare_average_variance(const VarianceProfile& v, int n);

/// Shannon entropy (nats) of the empirical (state, action) visit distribution.
/// `discretize` maps states to cells; identity when empty.
double joint_entropy(std::span<const Trajectory> data,
                     const std::function<State(std::span<const double>)>& discretize = {});

struct QualityBucket {
    int quality = 0;
    std::int64_t policies = 0;
    /// pair_counts[d] = unordered distinct pairs at Hamming distance d (0..9).
    std::vector<std::int64_t> pair_counts;

    double mean_diversity() const;
    std::int64_t pairs() const;
};

/// Finite-quality census of the 5^9 grid-world family: policy count per quality.
std::map<int, std::int64_t> quality_census(std::int64_t* nonterminating = nullptr);

/// Per quality bucket <= cap: policy count and pairwise-diversity distribution.
std::vector<QualityBucket> diversity_histogram(int quality_cap);

}  // namespace divexp::theory
