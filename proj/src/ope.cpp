#include "divexp/ope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "divexp/student_t.hpp"

namespace divexp {

namespace {

void require_two(std::span<const double> samples, const char* what) {
    if (samples.size() < 2) throw std::invalid_argument(std::string(what) + " needs at least two samples");
}

bool all_equal(std::span<const double> samples) {
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    return *lo == *hi;
}

std::string format_state(const State& s) {
    std::ostringstream out;
    out << '(';
    for (std::size_t i = 0; i < s.size(); ++i) out << (i ? "," : "") << s[i];
    out << ')';
    return out.str();
}

}  // namespace

double log_importance_weight(const Trajectory& trajectory, const Policy& target, const Policy& behavior) {
    if (target.num_actions() != behavior.num_actions()) {
        throw std::invalid_argument("target and behavior policies have different action spaces");
    }
    std::vector<double> p(static_cast<std::size_t>(target.num_actions()));
    std::vector<double> q(p.size());
    double log_w = 0.0;
    for (const auto& tr : trajectory.transitions) {
        target.distribution(tr.state, p);
        behavior.distribution(tr.state, q);
        const auto a = static_cast<std::size_t>(tr.action);
        if (!(q.at(a) > 0.0)) {
            throw std::domain_error("behavior policy '" + behavior.id() + "' has zero probability for action " +
                                    std::to_string(tr.action) + " at state " + format_state(tr.state));
        }
        if (p[a] <= 0.0) return -std::numeric_limits<double>::infinity();
        log_w += std::log(p[a]) - std::log(q[a]);
    }
    return log_w;
}

double importance_weight(const Trajectory& trajectory, const Policy& target, const Policy& behavior) {
    return std::exp(log_importance_weight(trajectory, target, behavior));
}

std::vector<ImportanceWeightedReturn> iw_returns(std::span<const Trajectory> data, const Policy& target,
                                                 const PolicyRegistry& behaviors, const MDPSpec& spec) {
    std::vector<ImportanceWeightedReturn> out;
    out.reserve(data.size());
    for (const auto& traj : data) {
        const Policy& behavior = behaviors.at(traj.behavior_id);
        const double ret = normalized_return(traj, spec);
        const double w = ret == 0.0 ? 0.0 : importance_weight(traj, target, behavior);
        out.push_back({ret * w, target.id(), traj.behavior_id, traj.traj_id});
    }
    return out;
}

SampleMoments sample_moments(std::span<const double> samples) {
    SampleMoments m;
    m.n = samples.size();
    if (m.n == 0) return m;
    m.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(m.n);
    if (m.n < 2) return m;
    double ss = 0.0;
    for (double x : samples) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(m.n - 1));
    return m;
}

double t_lower_bound(std::span<const double> samples, double delta) {
    require_two(samples, "t_lower_bound");
    if (!(delta > 0.0 && delta < 0.5)) throw std::invalid_argument("delta must lie in (0, 0.5)");
    if (all_equal(samples)) return samples.front();
    const SampleMoments m = sample_moments(samples);
    const double n = static_cast<double>(m.n);
    return m.mean - stats::student_t_quantile(1.0 - delta, n - 1.0) * m.stddev / std::sqrt(n);
}

double t_p_value(std::span<const double> samples, double rho) {
    require_two(samples, "t_p_value");
    if (all_equal(samples)) return samples.front() >= rho ? 0.0 : 1.0;
    const SampleMoments m = sample_moments(samples);
    const double n = static_cast<double>(m.n);
    const double t = (m.mean - rho) / (m.stddev / std::sqrt(n));
    return stats::student_t_upper_tail(t, n - 1.0);
}

std::vector<std::string> bh_select(std::span<const std::pair<std::string, double>> p_values, double delta) {
    std::vector<std::pair<std::string, double>> sorted(p_values.begin(), p_values.end());
    for (const auto& [id, p] : sorted) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p-value for '" + id + "' outside [0, 1]");
    }
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    const double r = static_cast<double>(sorted.size());
    std::size_t cutoff = 0;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (sorted[i - 1].second <= static_cast<double>(i) * delta / r) cutoff = i;
    }
    std::vector<std::string> rejected;
    rejected.reserve(cutoff);
    for (std::size_t i = 0; i < cutoff; ++i) rejected.push_back(sorted[i].first);
    return rejected;
}

bool SafetyTestReport::is_confirmed(const std::string& id) const {
    return std::find(confirmed.begin(), confirmed.end(), id) != confirmed.end();
}

SafetyTestReport safety_test(std::span<const PolicyPtr> candidates, std::span<const Trajectory> test_data,
                             const PolicyRegistry& behaviors, const MDPSpec& spec, double delta, double rho) {
    if (test_data.empty()) throw std::invalid_argument("safety_test needs test trajectories");
    SafetyTestReport report;
    report.rho_baseline = rho;
    report.delta = delta;
    std::vector<std::pair<std::string, double>> p_values;
    for (const auto& candidate : candidates) {
        const auto returns = iw_returns(test_data, *candidate, behaviors, spec);
        std::vector<double> values;
        values.reserve(returns.size());
        for (const auto& r : returns) values.push_back(r.value);
        CandidateTest test;
        test.id = candidate->id();
        test.mean = sample_moments(values).mean;
        test.lower_bound = t_lower_bound(values, delta);
        test.p_value = t_p_value(values, rho);
        p_values.emplace_back(test.id, test.p_value);
        report.candidates.push_back(std::move(test));
    }
    const auto rejected = bh_select(p_values, delta);
    for (const auto& c : report.candidates) {
        if (std::find(rejected.begin(), rejected.end(), c.id) != rejected.end()) report.confirmed.push_back(c.id);
    }
    return report;
}

}  // namespace divexp
