#include "divexp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "divexp/gridworld.hpp"
#include "divexp/policy_search.hpp"
#include "divexp/student_t.hpp"

namespace divexp {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T out{};
    in >> out;
    if (in.fail() || !in.eof()) throw std::invalid_argument("config key '" + key + "': invalid value '" + value + "'");
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("config key '" + key + "': invalid value '" + value + "'");
}

bool skip_line(const std::string& line) { return line.empty() || line.front() == '#'; }

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
    std::map<std::string, std::string> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (!entries.emplace(key, trim(line.substr(eq + 1))).second) {
            throw std::invalid_argument("config key '" + key + "' given twice");
        }
    }

    ExperimentConfig cfg;
    if (auto it = entries.find("domain"); it != entries.end()) {
        try {
            cfg = ExperimentConfig::defaults_for(parse_domain(it->second));
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("config key 'domain': invalid value '" + it->second + "'");
        }
        entries.erase(it);
    }
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"iterations", [&](auto& k, auto& v) { cfg.iterations = parse_number<int>(k, v); }},
        {"trajectories", [&](auto& k, auto& v) { cfg.trajectories = parse_number<int>(k, v); }},
        {"candidates", [&](auto& k, auto& v) { cfg.candidates = parse_number<int>(k, v); }},
        {"delta", [&](auto& k, auto& v) { cfg.delta = parse_number<double>(k, v); }},
        {"alpha", [&](auto& k, auto& v) { cfg.alpha = parse_number<double>(k, v); }},
        {"train_split",
         [&](auto& k, auto& v) {
             const auto slash = v.find('/');
             if (slash == std::string::npos) throw std::invalid_argument("config key '" + k + "': expected a/b");
             cfg.train_numerator = parse_number<int>(k, trim(v.substr(0, slash)));
             cfg.train_denominator = parse_number<int>(k, trim(v.substr(slash + 1)));
         }},
        {"seed", [&](auto& k, auto& v) { cfg.seed = parse_number<std::uint64_t>(k, v); }},
        {"support_floor", [&](auto& k, auto& v) { cfg.support_floor = parse_number<double>(k, v); }},
        {"es_population", [&](auto& k, auto& v) { cfg.es.population = parse_number<int>(k, v); }},
        {"es_generations", [&](auto& k, auto& v) { cfg.es.generations = parse_number<int>(k, v); }},
        {"es_step_size", [&](auto& k, auto& v) { cfg.es.step_size = parse_number<double>(k, v); }},
        {"es_preference_bound", [&](auto& k, auto& v) { cfg.es.preference_bound = parse_number<double>(k, v); }},
        {"es_gradient_step", [&](auto& k, auto& v) { cfg.es.gradient_step = parse_bool(k, v); }},
        {"es_adapt_step", [&](auto& k, auto& v) { cfg.es.adapt_step = parse_bool(k, v); }},
        {"es_trust_radius", [&](auto& k, auto& v) { cfg.es.trust_radius = parse_number<double>(k, v); }},
        {"es_bound_width", [&](auto& k, auto& v) { cfg.es.bound_width = parse_number<double>(k, v); }},
        {"es_test_ratio", [&](auto& k, auto& v) { cfg.es.test_ratio = parse_number<double>(k, v); }},
        {"fqi_iterations", [&](auto& k, auto& v) { cfg.fqi.iterations = parse_number<int>(k, v); }},
        {"fqi_gamma", [&](auto& k, auto& v) { cfg.fqi.gamma = parse_number<double>(k, v); }},
        {"fqi_ridge", [&](auto& k, auto& v) { cfg.fqi.ridge = parse_number<double>(k, v); }},
        {"fourier_order", [&](auto& k, auto& v) { cfg.fourier_order = parse_number<int>(k, v); }},
        {"value_rollouts", [&](auto& k, auto& v) { cfg.value_rollouts = parse_number<int>(k, v); }},
    };
    for (const auto& [key, value] : entries) {
        const auto it = setters.find(key);
        if (it == setters.end()) throw std::invalid_argument("unknown config key '" + key + "'");
        it->second(key, value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
    out << "domain = " << to_string(c.domain) << '\n'
        << "iterations = " << c.iterations << '\n'
        << "trajectories = " << c.trajectories << '\n'
        << "candidates = " << c.candidates << '\n'
        << "delta = " << fmt(c.delta) << '\n'
        << "alpha = " << fmt(c.alpha) << '\n'
        << "train_split = " << c.train_numerator << '/' << c.train_denominator << '\n'
        << "seed = " << c.seed << '\n'
        << "support_floor = " << fmt(c.support_floor) << '\n'
        << "es_population = " << c.es.population << '\n'
        << "es_generations = " << c.es.generations << '\n'
        << "es_step_size = " << fmt(c.es.step_size) << '\n'
        << "es_preference_bound = " << fmt(c.es.preference_bound) << '\n'
        << "es_gradient_step = " << (c.es.gradient_step ? "true" : "false") << '\n'
        << "es_adapt_step = " << (c.es.adapt_step ? "true" : "false") << '\n'
        << "es_trust_radius = " << fmt(c.es.trust_radius) << '\n'
        << "es_bound_width = " << fmt(c.es.bound_width) << '\n'
        << "es_test_ratio = " << fmt(c.es.test_ratio) << '\n'
        << "fqi_iterations = " << c.fqi.iterations << '\n'
        << "fqi_gamma = " << fmt(c.fqi.gamma) << '\n'
        << "fqi_ridge = " << fmt(c.fqi.ridge) << '\n'
        << "fourier_order = " << c.fourier_order << '\n'
        << "value_rollouts = " << c.value_rollouts << '\n';
}

std::string config_hash(const ExperimentConfig& config) {
    std::ostringstream text;
    write_config(text, config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text.str()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

std::optional<int> iterations_to_optimal(std::span<const IterationRecord> records) {
    for (const auto& rec : records) {
        for (const auto& c : rec.candidates) {
            if (c.confirmed && c.optimal) return rec.iteration;
        }
    }
    return std::nullopt;
}

std::optional<int> iterations_to_optimal(const RunResult& run, const std::set<std::int64_t>& optimal_set) {
    std::map<std::string, const Candidate*> by_id;
    for (const auto& c : run.confirmed) by_id[c.policy->id()] = &c;
    for (const auto& rec : run.records) {
        for (const auto& id : rec.confirmed) {
            const auto it = by_id.find(id);
            if (it == by_id.end()) continue;
            const auto greedy = grid::greedy_actions(*it->second->target);
            std::array<int, grid::kNumInterior> interior{};
            for (int i = 0; i < grid::kNumInterior; ++i) interior[i] = greedy[grid::interior_states()[i]];
            if (std::find(interior.begin(), interior.end(), grid::kNoGreedyAction) != interior.end()) continue;
            if (optimal_set.count(grid::encode_interior(interior))) return rec.iteration;
        }
    }
    return std::nullopt;
}

ErrorRate empirical_error_rate(std::span<const IterationRecord> records) {
    ErrorRate out;
    for (const auto& rec : records) {
        for (const auto& c : rec.candidates) {
            if (!c.confirmed) continue;
            ++out.confirmations;
            if (c.true_value < rec.rho_baseline) ++out.unsafe;
        }
    }
    out.rate = out.confirmations ? static_cast<double>(out.unsafe) / out.confirmations : 0.0;
    return out;
}

ErrorRate empirical_error_rate(std::span<const RunResult> runs) {
    ErrorRate out;
    for (const auto& run : runs) {
        const ErrorRate r = empirical_error_rate(run.records);
        out.unsafe += r.unsafe;
        out.confirmations += r.confirmations;
    }
    out.rate = out.confirmations ? static_cast<double>(out.unsafe) / out.confirmations : 0.0;
    return out;
}

RunSummary summarize(const RunResult& run) {
    RunSummary s;
    s.run = run.seed;
    s.algo = run.algo;
    for (const auto& rec : run.records) s.aggregate_return += rec.mean_return;
    s.final_return = run.records.empty() ? 0.0 : run.records.back().mean_return;
    s.iterations_to_optimal = iterations_to_optimal(run.records);
    const ErrorRate err = empirical_error_rate(run.records);
    s.unsafe_deployments = err.unsafe;
    s.confirmations = err.confirmations;
    return s;
}

std::vector<IterationRow> iteration_rows(const RunResult& run) {
    std::vector<IterationRow> rows;
    for (const auto& rec : run.records) {
        rows.push_back({run.seed, rec.iteration, run.algo, static_cast<int>(rec.deployed.size()), rec.rho_baseline,
                        rec.confirmations(), rec.mean_return, rec.joint_entropy});
    }
    return rows;
}

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("paired test needs equal-length samples");
    PairedTest out;
    out.n = a.size();
    if (out.n == 0) return out;
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
    double mean = 0.0;
    for (double x : d) mean += x;
    mean /= static_cast<double>(d.size());
    out.mean_diff = mean;
    if (d.size() < 2) return out;
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    const double se = std::sqrt(ss / static_cast<double>(d.size() - 1)) / std::sqrt(static_cast<double>(d.size()));
    if (se == 0.0) {
        out.t_statistic = mean == 0.0 ? 0.0 : std::copysign(INFINITY, mean);
        out.p_value = mean == 0.0 ? 1.0 : 0.0;
        return out;
    }
    out.t_statistic = mean / se;
    out.p_value = std::min(1.0, 2.0 * stats::student_t_upper_tail(std::abs(out.t_statistic),
                                                                  static_cast<double>(d.size() - 1)));
    return out;
}

ComparisonTable aggregate(std::span<const RunSummary> summaries, std::span<const IterationRow> rows) {
    ComparisonTable table;
    std::map<Algo, std::map<std::uint64_t, const RunSummary*>> runs;
    for (const auto& s : summaries) {
        if (!runs[s.algo].emplace(s.run, &s).second) {
            throw std::invalid_argument("duplicate run " + std::to_string(s.run) + " for " + to_string(s.algo));
        }
    }
    // curves[algo][run][iter]
    std::map<Algo, std::map<std::uint64_t, std::map<int, const IterationRow*>>> curves;
    for (const auto& r : rows) curves[r.algo][r.run][r.iter] = &r;

    for (const auto& [algo, by_run] : runs) {
        AlgoSummary a;
        a.algo = algo;
        a.runs = by_run.size();
        double iters_sum = 0.0;
        for (const auto& [id, s] : by_run) {
            a.mean_aggregate_return += s->aggregate_return;
            a.mean_final_return += s->final_return;
            a.unsafe += s->unsafe_deployments;
            if (s->iterations_to_optimal) {
                ++a.runs_reaching_optimal;
                iters_sum += *s->iterations_to_optimal;
            }
        }
        a.mean_aggregate_return /= static_cast<double>(a.runs);
        a.mean_final_return /= static_cast<double>(a.runs);
        if (a.runs_reaching_optimal) a.mean_iterations_to_optimal = iters_sum / a.runs_reaching_optimal;
        std::map<int, std::pair<double, double>> sums;
        std::map<int, int> counts;
        for (const auto& [id, iters] : curves[algo]) {
            if (!by_run.count(id)) continue;
            for (const auto& [it, row] : iters) {
                // summary.csv has no confirmation column, so count them from the iteration rows.
                a.confirmations += row->n_confirmed;
                sums[it].first += row->mean_return;
                sums[it].second += row->joint_entropy;
                ++counts[it];
            }
        }
        for (const auto& [it, s] : sums) {
            a.mean_return_curve.push_back(s.first / counts[it]);
            a.entropy_curve.push_back(s.second / counts[it]);
        }
        table.algos.push_back(std::move(a));
    }

    if (runs.count(Algo::DE) && runs.count(Algo::SPI)) {
        const auto& de = runs[Algo::DE];
        const auto& spi = runs[Algo::SPI];
        if (de.size() != spi.size()) throw std::invalid_argument("DE and SPI have different run counts");
        for (const auto& [id, s] : de) {
            if (!spi.count(id)) throw std::invalid_argument("run " + std::to_string(id) + " missing for SPI");
        }
        int max_iter = 0;
        for (const auto& r : rows) max_iter = std::max(max_iter, r.iter);
        for (int it = 1; it <= max_iter; ++it) {
            std::vector<double> a;
            std::vector<double> b;
            for (const auto& [id, s] : de) {
                const auto& de_run = curves[Algo::DE][id];
                const auto& spi_run = curves[Algo::SPI][id];
                if (de_run.count(it) && spi_run.count(it)) {
                    a.push_back(de_run.at(it)->mean_return);
                    b.push_back(spi_run.at(it)->mean_return);
                }
            }
            table.paired.push_back(paired_t_test(a, b));
        }
    }
    return table;
}

void write_iterations_csv(std::ostream& out, std::span<const IterationRow> rows, bool header) {
    if (header) out << "run,iter,algo,n_deployed,rho_baseline,n_confirmed,mean_return,joint_entropy\n";
    for (const auto& r : rows) {
        out << r.run << ',' << r.iter << ',' << to_string(r.algo) << ',' << r.n_deployed << ',' << fmt(r.rho_baseline)
            << ',' << r.n_confirmed << ',' << fmt(r.mean_return) << ',' << fmt(r.joint_entropy) << '\n';
    }
}

std::vector<IterationRow> read_iterations_csv(std::istream& in) {
    std::vector<IterationRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (skip_line(line) || line.rfind("run,", 0) == 0) continue;
        const auto f = split_csv(line);
        if (f.size() != 8) throw std::runtime_error("iterations.csv: expected 8 fields in '" + line + "'");
        rows.push_back({std::stoull(f[0]), std::stoi(f[1]), parse_algo(f[2]), std::stoi(f[3]), std::stod(f[4]),
                        std::stoi(f[5]), std::stod(f[6]), std::stod(f[7])});
    }
    return rows;
}

void write_summary_csv(std::ostream& out, std::span<const RunSummary> summaries, bool header) {
    if (header) out << "run,algo,aggregate_return,final_return,iters_to_optimal,unsafe_count\n";
    for (const auto& s : summaries) {
        out << s.run << ',' << to_string(s.algo) << ',' << fmt(s.aggregate_return) << ',' << fmt(s.final_return) << ','
            << (s.iterations_to_optimal ? std::to_string(*s.iterations_to_optimal) : "none") << ','
            << s.unsafe_deployments << '\n';
    }
}

std::vector<RunSummary> read_summary_csv(std::istream& in) {
    std::vector<RunSummary> out;
    std::string line;
    while (std::getline(in, line)) {
        if (skip_line(line) || line.rfind("run,", 0) == 0) continue;
        const auto f = split_csv(line);
        if (f.size() != 6) throw std::runtime_error("summary.csv: expected 6 fields in '" + line + "'");
        RunSummary s;
        s.run = std::stoull(f[0]);
        s.algo = parse_algo(f[1]);
        s.aggregate_return = std::stod(f[2]);
        s.final_return = std::stod(f[3]);
        if (f[4] != "none") s.iterations_to_optimal = std::stoi(f[4]);
        s.unsafe_deployments = std::stoi(f[5]);
        out.push_back(s);
    }
    return out;
}

void write_comparison(std::ostream& out, const ComparisonTable& table) {
    out << "algo,runs,mean_aggregate_return,mean_final_return,runs_reaching_optimal,mean_iters_to_optimal,"
           "unsafe,confirmations\n";
    for (const auto& a : table.algos) {
        out << to_string(a.algo) << ',' << a.runs << ',' << fmt(a.mean_aggregate_return) << ','
            << fmt(a.mean_final_return) << ',' << a.runs_reaching_optimal << ',' << fmt(a.mean_iterations_to_optimal)
            << ',' << a.unsafe << ',' << a.confirmations << '\n';
    }
    if (table.paired.empty()) return;
    out << "\niter,de_curve,spi_curve,mean_diff,t,p_value\n";
    const AlgoSummary* de = nullptr;
    const AlgoSummary* spi = nullptr;
    for (const auto& a : table.algos) (a.algo == Algo::DE ? de : spi) = &a;
    for (std::size_t i = 0; i < table.paired.size(); ++i) {
        const auto& p = table.paired[i];
        out << i + 1 << ',' << (i < de->mean_return_curve.size() ? fmt(de->mean_return_curve[i]) : "") << ','
            << (i < spi->mean_return_curve.size() ? fmt(spi->mean_return_curve[i]) : "") << ',' << fmt(p.mean_diff)
            << ',' << fmt(p.t_statistic) << ',' << fmt(p.p_value) << '\n';
    }
}

void write_policy(std::ostream& out, const Candidate& candidate) {
    const auto& mixed = *candidate.policy;
    out << "policy " << mixed.id() << " base=" << mixed.base()->id() << " alpha=" << fmt(mixed.alpha());
    if (const auto* softmax = dynamic_cast<const SoftmaxPolicy*>(candidate.target.get())) {
        const auto& p = softmax->params();
        out << " kind=softmax states=" << p.num_states << " actions=" << p.num_actions
            << " temperature=" << fmt(p.temperature) << '\n';
        for (int s = 0; s < p.num_states; ++s) {
            for (int a = 0; a < p.num_actions; ++a) out << (a ? " " : "") << fmt(p.at(s, a));
            out << '\n';
        }
    } else if (const auto* greedy = dynamic_cast<const QGreedyPolicy*>(candidate.target.get())) {
        const auto& q = greedy->q();
        out << " kind=fourier order=" << q.basis().order() << " dim=" << q.basis().state_dim()
            << " actions=" << q.num_actions() << '\n';
        for (int a = 0; a < q.num_actions(); ++a) {
            const auto& w = q.weights(a);
            for (Eigen::Index i = 0; i < w.size(); ++i) out << (i ? " " : "") << fmt(w[i]);
            out << '\n';
        }
    } else {
        out << " kind=opaque\n";
    }
    out << "end\n";
}

}  // namespace divexp
