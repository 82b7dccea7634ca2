#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "divexp/de_loop.hpp"

namespace divexp {

// Experiment config: flat `key = value` lines, `#` starts a comment.
// Keys: domain, iterations, trajectories, candidates, delta, alpha,
// train_split (as `a/b`), seed, support_floor, es_population,
// es_generations, es_step_size, es_preference_bound, es_gradient_step,
// es_adapt_step, es_trust_radius, es_bound_width, es_test_ratio,
// fqi_iterations, fqi_gamma, fqi_ridge, fourier_order, value_rollouts.
// The domain key is applied first so later keys override its defaults.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const ExperimentConfig& config);
/// FNV-1a over the canonical written form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct RunSummary {
    std::uint64_t run = 0;
    Algo algo = Algo::DE;
    double aggregate_return = 0.0;
    double final_return = 0.0;
    std::optional<int> iterations_to_optimal;
    int unsafe_deployments = 0;
    int confirmations = 0;
};

/// Row of iterations.csv.
struct IterationRow {
    std::uint64_t run = 0;
    int iter = 0;
    Algo algo = Algo::DE;
    int n_deployed = 0;
    double rho_baseline = 0.0;
    int n_confirmed = 0;
    double mean_return = 0.0;
    double joint_entropy = 0.0;
};

/// First iteration whose confirmed set contains a candidate flagged optimal.
std::optional<int> iterations_to_optimal(std::span<const IterationRecord> records);
/// Grid world: first iteration confirming a candidate whose greedy interior
/// action map is a member of `optimal_set` (family indices).
std::optional<int> iterations_to_optimal(const RunResult& run, const std::set<std::int64_t>& optimal_set);

RunSummary summarize(const RunResult& run);
std::vector<IterationRow> iteration_rows(const RunResult& run);

struct ErrorRate {
    double rate = 0.0;
    int unsafe = 0;
    int confirmations = 0;
};
/// Fraction of confirmations whose true value is below the baseline they were certified against.
ErrorRate empirical_error_rate(std::span<const IterationRecord> records);
ErrorRate empirical_error_rate(std::span<const RunResult> runs);

struct PairedTest {
    std::size_t n = 0;
    double mean_diff = 0.0;
    double t_statistic = 0.0;
    double p_value = 1.0;  // two-sided
};
PairedTest paired_t_test(std::span<const double> a, std::span<const double> b);

struct AlgoSummary {
    Algo algo = Algo::DE;
    std::size_t runs = 0;
    double mean_aggregate_return = 0.0;
    double mean_final_return = 0.0;
    std::vector<double> mean_return_curve;
    std::vector<double> entropy_curve;
    std::size_t runs_reaching_optimal = 0;
    double mean_iterations_to_optimal = 0.0;  // among runs that reach one
    int unsafe = 0;
    int confirmations = 0;
};

struct ComparisonTable {
    std::vector<AlgoSummary> algos;
    /// DE minus SPI per iteration, paired by run id; empty unless both algos are present.
    std::vector<PairedTest> paired;
};

ComparisonTable aggregate(std::span<const RunSummary> summaries, std::span<const IterationRow> rows);

void write_iterations_csv(std::ostream& out, std::span<const IterationRow> rows, bool header = true);
std::vector<IterationRow> read_iterations_csv(std::istream& in);
void write_summary_csv(std::ostream& out, std::span<const RunSummary> summaries, bool header = true);
std::vector<RunSummary> read_summary_csv(std::istream& in);
void write_comparison(std::ostream& out, const ComparisonTable& table);

/// Text export of a confirmed candidate: header line with id, lineage (mixing
/// base), alpha and kind, then the target's preference or weight table.
void write_policy(std::ostream& out, const Candidate& candidate);

}  // namespace divexp
