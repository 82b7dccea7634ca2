#pragma once

#include <cstdint>
#include <cstddef>

namespace divexp {

struct UnbiasednessCheck {
    std::size_t samples = 0;
    double exact = 0.0;
    double mean = 0.0;
    double standard_error = 0.0;

    double z() const { return standard_error > 0.0 ? (mean - exact) / standard_error : 0.0; }
};

/// Grid world: behavior 0.5 uniform + 0.5 optimal, target 0.3 uniform + 0.7
/// optimal. Mean of importance weighted returns against the exact value.
UnbiasednessCheck grid_is_unbiasedness(std::size_t samples, std::uint64_t seed);

struct CoverageCheck {
    std::size_t trials = 0;
    std::size_t violations = 0;
    double true_mean = 0.0;

    double rate() const { return trials ? static_cast<double>(violations) / static_cast<double>(trials) : 0.0; }
};

/// Beta(a, b) samples; counts trials whose t lower bound exceeds a / (a + b).
CoverageCheck t_bound_coverage(double a, double b, std::size_t n, std::size_t trials, double delta,
                               std::uint64_t seed);

struct FdrCheck {
    std::size_t trials = 0;
    double mean_fdp = 0.0;
    double mean_power = 0.0;
};

/// Candidates with per-candidate Gaussian samples; true nulls have mean
/// exactly `rho`, false nulls mean `rho + effect`. BH over one-sided t p-values.
FdrCheck bh_fdr_simulation(int true_nulls, int false_nulls, std::size_t samples, double effect,
                           std::size_t trials, double delta, std::uint64_t seed);

}  // namespace divexp
