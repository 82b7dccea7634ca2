#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "divexp/de_loop.hpp"
#include "divexp/gridworld.hpp"
#include "divexp/harness.hpp"
#include "divexp/theory.hpp"
#include "divexp/trajectory_io.hpp"
#include "divexp/verification.hpp"

namespace fs = std::filesystem;
using namespace divexp;

namespace {

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            const auto s = std::stoull(text);
            return {s, s};
        }
        const auto a = std::stoull(text.substr(0, dots));
        const auto b = std::stoull(text.substr(dots + 2));
        if (b < a) throw std::invalid_argument("empty range");
        return {a, b};
    } catch (const std::exception&) {
        throw CLI::ValidationError("--seeds", "expected A..B with A <= B, got '" + text + "'");
    }
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

int cmd_run(const std::string& config_path, const std::string& algo_text, const std::string& seeds,
            const std::string& out_dir) {
    const ExperimentConfig base = load_config(config_path);
    const Algo algo = parse_algo(algo_text);
    const auto [first, last] = parse_seed_range(seeds);
    fs::create_directories(out_dir);

    const std::string stamp = "# config_hash=" + config_hash(base) + " seeds=" + seeds;
    auto iter_out = open_out(fs::path(out_dir) / "iterations.csv");
    auto summary_out = open_out(fs::path(out_dir) / "summary.csv");
    auto traj_out = open_out(fs::path(out_dir) / "trajectories.csv");
    auto policy_out = open_out(fs::path(out_dir) / "policies.txt");
    iter_out << stamp << '\n';
    summary_out << stamp << '\n';
    {
        auto echo = open_out(fs::path(out_dir) / "config.echo");
        echo << "# config_hash=" << config_hash(base) << '\n';
        write_config(echo, base);
    }

    for (std::uint64_t seed = first; seed <= last; ++seed) {
        ExperimentConfig cfg = base;
        cfg.seed = seed;
        const RunResult result = run_experiment(cfg, algo);
        const auto rows = iteration_rows(result);
        const RunSummary summary = summarize(result);
        write_iterations_csv(iter_out, rows, seed == first);
        write_summary_csv(summary_out, std::span(&summary, 1), seed == first);
        write_trajectories(traj_out, seed, result.trajectories, seed == first);
        for (const auto& c : result.confirmed) {
            policy_out << "# run=" << seed << '\n';
            write_policy(policy_out, c);
        }
        std::cout << "run " << seed << ' ' << to_string(algo) << ": aggregate_return=" << summary.aggregate_return
                  << " final_return=" << summary.final_return << " confirmations=" << summary.confirmations
                  << " unsafe=" << summary.unsafe_deployments << " iters_to_optimal="
                  << (summary.iterations_to_optimal ? std::to_string(*summary.iterations_to_optimal) : "none")
                  << '\n';
        if (seed == last) break;
    }
    return 0;
}

int cmd_aggregate(const std::vector<std::string>& dirs, const std::string& out_path) {
    std::vector<RunSummary> summaries;
    std::vector<IterationRow> rows;
    for (const auto& d : dirs) {
        std::ifstream s(fs::path(d) / "summary.csv");
        std::ifstream i(fs::path(d) / "iterations.csv");
        if (!s || !i) throw std::runtime_error(d + ": missing summary.csv or iterations.csv");
        auto more_s = read_summary_csv(s);
        auto more_i = read_iterations_csv(i);
        summaries.insert(summaries.end(), more_s.begin(), more_s.end());
        rows.insert(rows.end(), more_i.begin(), more_i.end());
    }
    const ComparisonTable table = aggregate(summaries, rows);
    if (out_path.empty()) {
        write_comparison(std::cout, table);
    } else {
        auto out = open_out(out_path);
        write_comparison(out, table);
    }
    return 0;
}

int cmd_verify_theory(std::uint64_t seed) {
    bool ok = true;
    const auto bound = theory::verify_distance_bound(12, 4);
    ok &= bound.violations == 0;
    std::cout << "distance bound: " << (bound.violations == 0 ? "PASS" : "FAIL") << " (" << bound.instances
              << " instances)\n";

    Rng rng(seed);
    theory::EqualAllocationReport t1;
    for (int m : {2, 3}) {
        const auto r = theory::verify_equal_allocation_random(6, m, 3, 1000, rng);
        t1.profiles += r.profiles;
        t1.minimizers_checked += r.minimizers_checked;
        t1.violations += r.violations;
        t1.expectation_mismatches += r.expectation_mismatches;
    }
    const bool t1_ok = t1.violations == 0 && t1.expectation_mismatches == 0;
    ok &= t1_ok;
    std::cout << "equal allocation: " << (t1_ok ? "PASS" : "FAIL") << " (" << t1.profiles << " profiles, "
              << t1.minimizers_checked << " minimizers)\n";

    double max_diff = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const int m = 2 + k % 3;
        const auto v = theory::analytic_profile(theory::random_densities(3, static_cast<std::size_t>(m), 6, rng));
        const auto [de, single] = theory::compare_average_variance(v, 12);
        max_diff = std::max(max_diff, std::abs(de - single) / std::max(1.0, std::abs(single)));
    }
    const bool t2_ok = max_diff <= 1e-12;
    ok &= t2_ok;
    std::cout << "average variance: " << (t2_ok ? "PASS" : "FAIL") << " (max |diff|=" << max_diff << ")\n";
    return ok ? 0 : 1;
}

int cmd_diversity(int cap) {
    std::cout << "quality,policies,diversity,pairs\n";
    for (const auto& bucket : theory::diversity_histogram(cap)) {
        for (std::size_t d = 0; d < bucket.pair_counts.size(); ++d) {
            std::cout << bucket.quality << ',' << bucket.policies << ',' << d << ',' << bucket.pair_counts[d] << '\n';
        }
    }
    return 0;
}

int cmd_verify_ope(std::uint64_t seed) {
    const auto is = grid_is_unbiasedness(50000, derive_seed(seed, 1));
    const bool is_ok = std::abs(is.z()) <= 3.0;
    std::cout << "unbiasedness: " << (is_ok ? "PASS" : "FAIL") << " (exact=" << is.exact << " mean=" << is.mean
              << " se=" << is.standard_error << " z=" << is.z() << ")\n";
    const auto cov = t_bound_coverage(2.0, 5.0, 32, 10000, 0.05, derive_seed(seed, 2));
    const bool cov_ok = cov.rate() <= 0.07;
    std::cout << "coverage: " << (cov_ok ? "PASS" : "FAIL") << " (violation rate=" << cov.rate() << " over "
              << cov.trials << " trials)\n";
    const auto fdr = bh_fdr_simulation(5, 5, 20, 0.8, 10000, 0.05, derive_seed(seed, 3));
    const bool fdr_ok = fdr.mean_fdp <= 0.06;
    std::cout << "fdr: " << (fdr_ok ? "PASS" : "FAIL") << " (mean FDP=" << fdr.mean_fdp
              << " power=" << fdr.mean_power << ")\n";
    return is_ok && cov_ok && fdr_ok ? 0 : 1;
}

int cmd_enumerate() {
    std::int64_t nonterminating = 0;
    const auto census = theory::quality_census(&nonterminating);
    std::cout << "quality,diversity_count\n";
    for (const auto& [quality, count] : census) std::cout << quality << ',' << count << '\n';
    const auto it = census.find(0);
    std::cout << "optimal_policies=" << (it == census.end() ? 0 : it->second) << '\n';
    std::cout << "nonterminating_policies=" << nonterminating << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diverse exploration for fast and safe policy improvement"};
    app.require_subcommand(1);

    std::string config_path;
    std::string algo = "de";
    std::string seeds = "0..0";
    std::string out_dir;
    auto* run = app.add_subcommand("run", "Run seeded experiments and write CSV outputs");
    run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("--algo", algo, "de or spi")->check(CLI::IsMember({"de", "spi"}));
    run->add_option("--seeds", seeds, "Seed range A..B");
    run->add_option("--out", out_dir, "Output directory")->required();

    std::vector<std::string> in_dirs;
    std::string agg_out;
    auto* agg = app.add_subcommand("aggregate", "Compare run directories (per-algo means, paired tests)");
    agg->add_option("dirs", in_dirs, "Directories written by `run`")->required()->check(CLI::ExistingDirectory);
    agg->add_option("--out", agg_out, "Output file (stdout if omitted)");

    std::uint64_t seed = 1;
    auto* theory_cmd = app.add_subcommand("verify-theory", "Check the allocation distance bound and variance identities numerically");
    theory_cmd->add_option("--seed", seed, "RNG seed");
    auto* ope_cmd = app.add_subcommand("verify-ope", "Monte Carlo checks of the off-policy estimators");
    ope_cmd->add_option("--seed", seed, "RNG seed");

    int cap = 10;
    auto* div = app.add_subcommand("diversity", "Pairwise diversity histogram per quality bucket");
    div->add_option("--cap", cap, "Largest quality bucket")->check(CLI::NonNegativeNumber);

    auto* enumerate = app.add_subcommand("enumerate-gridworld", "Quality census of the grid-world policy family");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config_path, algo, seeds, out_dir);
        if (*agg) return cmd_aggregate(in_dirs, agg_out);
        if (*theory_cmd) return cmd_verify_theory(seed);
        if (*ope_cmd) return cmd_verify_ope(seed);
        if (*div) return cmd_diversity(cap);
        if (*enumerate) return cmd_enumerate();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
