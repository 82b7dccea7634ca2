#include "divexp/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "divexp/gridworld.hpp"

namespace divexp::theory {

namespace {

void check_density(const std::vector<double>& d, std::size_t support, const char* what) {
    if (d.size() != support) throw std::invalid_argument(std::string(what) + " has the wrong support size");
    double sum = 0.0;
    for (double p : d) {
        if (!(p >= 0.0)) throw std::invalid_argument(std::string(what) + " has a negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument(std::string(what) + " does not sum to one");
}

void check_allocation(const VarianceProfile& v, const Allocation& k, int n) {
    if (k.size() != v.proposals()) throw std::invalid_argument("allocation size does not match the profile");
    int sum = 0;
    for (int kt : k) {
        if (kt < 0) throw std::invalid_argument("allocation has a negative entry");
        sum += kt;
    }
    if (sum != n) throw std::invalid_argument("allocation does not sum to n");
}

std::vector<double> normalized(std::vector<double> w) {
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= sum;
    return w;
}

void compose(int remaining, std::size_t slot, Allocation& current, std::vector<Allocation>& out) {
    if (slot + 1 == current.size()) {
        current[slot] = remaining;
        out.push_back(current);
        return;
    }
    for (int v = 0; v <= remaining; ++v) {
        current[slot] = v;
        compose(remaining - v, slot + 1, current, out);
    }
}

}  // namespace

void DensityPair::validate() const {
    if (targets.empty() || proposals.empty() || payoff.empty()) throw std::invalid_argument("empty density pair");
    for (const auto& p : targets) check_density(p, payoff.size(), "target density");
    for (const auto& q : proposals) check_density(q, payoff.size(), "proposal density");
    for (const auto& q : proposals) {
        for (std::size_t x = 0; x < payoff.size(); ++x) {
            for (const auto& p : targets) {
                if (p[x] * payoff[x] != 0.0 && !(q[x] > 0.0)) {
                    throw std::invalid_argument("proposal density is zero where a target needs support");
                }
            }
        }
    }
}

void VarianceProfile::validate() const {
    if (variances.empty() || variances.front().empty()) throw std::invalid_argument("empty variance profile");
    for (const auto& row : variances) {
        if (row.size() != proposals()) throw std::invalid_argument("ragged variance profile");
        for (double v : row) {
            if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("variance entries must be finite and >= 0");
        }
    }
}

VarianceProfile analytic_profile(const DensityPair& d) {
    d.validate();
    VarianceProfile v;
    for (const auto& p : d.targets) {
        std::vector<double> row;
        for (const auto& q : d.proposals) {
            double mean = 0.0;
            double second = 0.0;
            for (std::size_t x = 0; x < d.support_size(); ++x) {
                if (q[x] <= 0.0) continue;
                const double value = p[x] * d.payoff[x] / q[x];
                mean += q[x] * value;
                second += q[x] * value * value;
            }
            row.push_back(std::max(0.0, second - mean * mean));
        }
        v.variances.push_back(std::move(row));
    }
    return v;
}

double monte_carlo_variance(const DensityPair& d, std::size_t j, std::size_t t, std::size_t samples, Rng& rng) {
    const auto& p = d.targets.at(j);
    const auto& q = d.proposals.at(t);
    std::discrete_distribution<std::size_t> draw(q.begin(), q.end());
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 1; i <= samples; ++i) {
        const std::size_t x = draw(rng);
        const double value = p[x] * d.payoff[x] / q[x];
        const double delta = value - mean;
        mean += delta / static_cast<double>(i);
        m2 += delta * (value - mean);
    }
    return samples > 1 ? m2 / static_cast<double>(samples - 1) : 0.0;
}

DensityPair random_densities(std::size_t targets, std::size_t proposals, std::size_t support, Rng& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    const auto draw = [&] {
        std::vector<double> w(support);
        for (double& x : w) x = u(rng);
        return normalized(std::move(w));
    };
    DensityPair d;
    for (std::size_t j = 0; j < targets; ++j) d.targets.push_back(draw());
    for (std::size_t t = 0; t < proposals; ++t) d.proposals.push_back(draw());
    d.payoff.resize(support);
    for (double& f : d.payoff) f = u(rng);
    return d;
}

double single_is_variance(const VarianceProfile& v, std::size_t j, std::size_t t, int n) {
    if (n < 1) throw std::invalid_argument("sample count must be >= 1");
    return v.variances.at(j).at(t) / n;
}

double multi_is_variance(const VarianceProfile& v, std::size_t j, const Allocation& k, int n) {
    check_allocation(v, k, n);
    const auto& row = v.variances.at(j);
    double sum = 0.0;
    for (std::size_t t = 0; t < k.size(); ++t) sum += k[t] * row[t];
    return sum / (static_cast<double>(n) * n);
}

double uniformity_objective(const VarianceProfile& v, const Allocation& k, int n) {
    const std::size_t r = v.targets();
    std::vector<double> vars(r);
    for (std::size_t j = 0; j < r; ++j) vars[j] = multi_is_variance(v, j, k, n);
    const double mean = std::accumulate(vars.begin(), vars.end(), 0.0) / static_cast<double>(r);
    double dev = 0.0;
    for (double x : vars) dev += std::abs(x - mean);
    return dev / static_cast<double>(r);
}

int l1_distance(const Allocation& a, const Allocation& b) {
    if (a.size() != b.size()) throw std::invalid_argument("allocations differ in size");
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
    return d;
}

int max_l1_bound(const Allocation& k) {
    if (k.empty()) throw std::invalid_argument("empty allocation");
    const int n = std::accumulate(k.begin(), k.end(), 0);
    return 2 * n - 2 * *std::min_element(k.begin(), k.end());
}

std::vector<Allocation> compositions(int n, int m) {
    if (n < 0 || m < 1) throw std::invalid_argument("compositions need n >= 0 and m >= 1");
    std::vector<Allocation> out;
    Allocation current(static_cast<std::size_t>(m), 0);
    compose(n, 0, current, out);
    return out;
}

int max_l1_distance_bruteforce(const Allocation& k) {
    const int n = std::accumulate(k.begin(), k.end(), 0);
    int best = 0;
    for (const auto& y : compositions(n, static_cast<int>(k.size()))) best = std::max(best, l1_distance(y, k));
    return best;
}

Allocation equal_allocation(int n, int m) {
    if (m < 1 || n % m != 0) throw std::invalid_argument("equal allocation needs m to divide n");
    return Allocation(static_cast<std::size_t>(m), n / m);
}

Allocation single_allocation(int n, int m, int t) {
    if (t < 0 || t >= m) throw std::out_of_range("proposal index out of range");
    Allocation k(static_cast<std::size_t>(m), 0);
    k[static_cast<std::size_t>(t)] = n;
    return k;
}

std::vector<Allocation> optimal_allocations(const VarianceProfile& v, int n, double tolerance) {
    const auto all = compositions(n, static_cast<int>(v.proposals()));
    std::vector<double> values;
    values.reserve(all.size());
    for (const auto& k : all) values.push_back(uniformity_objective(v, k, n));
    const double best = *std::min_element(values.begin(), values.end());
    const double slack = tolerance * std::max(1.0, std::abs(best));
    std::vector<Allocation> out;
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (values[i] <= best + slack) out.push_back(all[i]);
    }
    return out;
}

DistanceBoundReport verify_distance_bound(int max_n, int max_m) {
    DistanceBoundReport report;
    for (int m = 1; m <= max_m; ++m) {
        for (int n = 1; n <= max_n; ++n) {
            const auto all = compositions(n, m);
            for (const auto& k : all) {
                int brute = 0;
                for (const auto& y : all) brute = std::max(brute, l1_distance(y, k));
                ++report.instances;
                if (brute != max_l1_bound(k)) ++report.violations;
            }
        }
    }
    return report;
}

EqualAllocationReport verify_equal_allocation(const VarianceProfile& v, int n) {
    v.validate();
    const int m = static_cast<int>(v.proposals());
    const Allocation de = equal_allocation(n, m);
    EqualAllocationReport report;
    report.profiles = 1;
    for (const auto& star : optimal_allocations(v, n)) {
        ++report.minimizers_checked;
        int spi_total = 0;
        for (int t = 0; t < m; ++t) spi_total += l1_distance(single_allocation(n, m, t), star);
        // E_t |k^(t) - k*| = spi_total / m; compare in integers.
        if (spi_total != 2 * n * m - 2 * n) ++report.expectation_mismatches;
        const int de_dist = l1_distance(de, star);
        if (de_dist < 0 || de_dist * m > spi_total) ++report.violations;
    }
    return report;
}

EqualAllocationReport verify_equal_allocation_random(int n, int m, std::size_t targets, std::size_t profiles, Rng& rng) {
    EqualAllocationReport total;
    for (std::size_t i = 0; i < profiles; ++i) {
        const auto v = analytic_profile(random_densities(targets, static_cast<std::size_t>(m), 6, rng));
        const auto r = verify_equal_allocation(v, n);
        total.profiles += r.profiles;
        total.minimizers_checked += r.minimizers_checked;
        total.violations += r.violations;
        total.expectation_mismatches += r.expectation_mismatches;
    }
    return total;
}

std::pair<double, double> compare_average_variance(const VarianceProfile& v, int n) {
    v.validate();
    const int m = static_cast<int>(v.proposals());
    const std::size_t r = v.targets();
    const Allocation de = equal_allocation(n, m);
    double de_avg = 0.0;
    for (std::size_t j = 0; j < r; ++j) de_avg += multi_is_variance(v, j, de, n);
    de_avg /= static_cast<double>(r);
    double spi_avg = 0.0;
    for (int t = 0; t < m; ++t) {
        const Allocation single = single_allocation(n, m, t);
        double avg = 0.0;
        for (std::size_t j = 0; j < r; ++j) avg += multi_is_variance(v, j, single, n);
        spi_avg += avg / static_cast<double>(r);
    }
    return {de_avg, spi_avg / m};
}

double joint_entropy(std::span<const Trajectory> data, const std::function<State(std::span<const double>)>& discretize) {
    std::map<std::pair<State, int>, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& traj : data) {
        for (const auto& tr : traj.transitions) {
            State key = discretize ? discretize(tr.state) : tr.state;
            ++counts[{std::move(key), tr.action}];
            ++total;
        }
    }
    if (total == 0) throw std::invalid_argument("joint entropy of an empty data set");
    double h = 0.0;
    for (const auto& [key, c] : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log(p);
    }
    return std::max(0.0, h);
}

double QualityBucket::mean_diversity() const {
    const std::int64_t n = pairs();
    if (n == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t d = 0; d < pair_counts.size(); ++d) sum += static_cast<double>(d) * pair_counts[d];
    return sum / static_cast<double>(n);
}

std::int64_t QualityBucket::pairs() const {
    return std::accumulate(pair_counts.begin(), pair_counts.end(), std::int64_t{0});
}

std::map<int, std::int64_t> quality_census(std::int64_t* nonterminating) {
    std::map<int, std::int64_t> census;
    std::int64_t loops = 0;
    for (std::int64_t i = 0; i < grid::kFamilySize; ++i) {
        const int q = grid::policy_quality(i);
        if (q == grid::kUnreachable) {
            ++loops;
        } else {
            ++census[q];
        }
    }
    if (nonterminating) *nonterminating = loops;
    return census;
}

std::vector<QualityBucket> diversity_histogram(int quality_cap) {
    if (quality_cap < 0) throw std::invalid_argument("quality cap must be >= 0");
    std::map<int, std::vector<std::array<std::uint8_t, grid::kNumInterior>>> members;
    for (std::int64_t i = 0; i < grid::kFamilySize; ++i) {
        const int q = grid::policy_quality(i);
        if (q == grid::kUnreachable || q > quality_cap) continue;
        std::array<std::uint8_t, grid::kNumInterior> digits{};
        std::int64_t rest = i;
        for (auto& d : digits) {
            d = static_cast<std::uint8_t>(rest % grid::kNumActions);
            rest /= grid::kNumActions;
        }
        members[q].push_back(digits);
    }
    std::vector<QualityBucket> out;
    for (int q = 0; q <= quality_cap; ++q) {
        QualityBucket bucket;
        bucket.quality = q;
        bucket.pair_counts.assign(grid::kNumInterior + 1, 0);
        const auto it = members.find(q);
        if (it != members.end()) {
            const auto& list = it->second;
            bucket.policies = static_cast<std::int64_t>(list.size());
            for (std::size_t a = 0; a < list.size(); ++a) {
                for (std::size_t b = a + 1; b < list.size(); ++b) {
                    int d = 0;
                    for (int s = 0; s < grid::kNumInterior; ++s) d += list[a][s] != list[b][s];
                    ++bucket.pair_counts[static_cast<std::size_t>(d)];
                }
            }
        }
        out.push_back(std::move(bucket));
    }
    return out;
}

}  // namespace divexp::theory
