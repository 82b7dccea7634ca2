#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "divexp/mdp.hpp"

namespace divexp {

struct ImportanceWeightedReturn {
    double value = 0.0;
    std::string target_id;
    std::string behavior_id;
    std::int64_t traj_id = 0;
};

/// log prod_t target(a_t|s_t) / behavior(a_t|s_t); -inf when the target never
/// takes a logged action. Throws if the behavior probability of a logged action is zero.
double log_importance_weight(const Trajectory& trajectory, const Policy& target, const Policy& behavior);
double importance_weight(const Trajectory& trajectory, const Policy& target, const Policy& behavior);

/// One importance weighted return per trajectory, each re-weighted against
/// the trajectory's own behavior policy looked up in `behaviors`.
std::vector<ImportanceWeightedReturn> iw_returns(std::span<const Trajectory> data, const Policy& target,
                                                 const PolicyRegistry& behaviors, const MDPSpec& spec);

struct SampleMoments {
    double mean = 0.0;
    double stddev = 0.0;  // n - 1 denominator
    std::size_t n = 0;
};
SampleMoments sample_moments(std::span<const double> samples);

/// One-sided 1 - delta Student-t lower confidence bound on the mean.
double t_lower_bound(std::span<const double> samples, double delta);

/// One-sided p-value for H0: mean <= rho against H1: mean > rho.
double t_p_value(std::span<const double> samples, double rho);

/// Benjamini-Hochberg step-up selection at FDR level `delta`. Returns the ids
/// of the rejected nulls in ascending p-value order.
std::vector<std::string> bh_select(std::span<const std::pair<std::string, double>> p_values, double delta);

struct CandidateTest {
    std::string id;
    double mean = 0.0;
    double lower_bound = 0.0;
    double p_value = 1.0;
};

struct SafetyTestReport {
    std::vector<CandidateTest> candidates;
    /// Confirmed ids in candidate order.
    std::vector<std::string> confirmed;
    double rho_baseline = 0.0;
    double delta = 0.0;

    bool is_confirmed(const std::string& id) const;
};

SafetyTestReport safety_test(std::span<const PolicyPtr> candidates, std::span<const Trajectory> test_data,
                             const PolicyRegistry& behaviors, const MDPSpec& spec, double delta, double rho);

}  // namespace divexp
