#include <sstream>

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "divexp/de_loop.hpp"
#include "divexp/gridworld.hpp"
#include "divexp/harness.hpp"
#include "divexp/ope.hpp"
#include "divexp/student_t.hpp"
#include "divexp/theory.hpp"

namespace py = pybind11;
using namespace divexp;

namespace {

py::dict candidate_dict(const CandidateOutcome& c) {
    py::dict d;
    d["id"] = c.id;
    d["mean"] = c.mean;
    d["lower_bound"] = c.lower_bound;
    d["p_value"] = c.p_value;
    d["confirmed"] = c.confirmed;
    d["true_value"] = c.true_value;
    d["optimal"] = c.optimal;
    return d;
}

py::dict record_dict(const IterationRecord& r) {
    py::dict d;
    d["iteration"] = r.iteration;
    d["deployed"] = r.deployed;
    d["counts"] = r.counts;
    d["rho_baseline"] = r.rho_baseline;
    d["confirmed"] = r.confirmed;
    d["mean_return"] = r.mean_return;
    d["joint_entropy"] = r.joint_entropy;
    d["train_size"] = r.train_size;
    d["test_size"] = r.test_size;
    py::list cands;
    for (const auto& c : r.candidates) cands.append(candidate_dict(c));
    d["candidates"] = cands;
    return d;
}

py::dict run_dict(const RunResult& run) {
    const auto s = summarize(run);
    py::dict summary;
    summary["aggregate_return"] = s.aggregate_return;
    summary["final_return"] = s.final_return;
    summary["iterations_to_optimal"] = s.iterations_to_optimal;
    summary["unsafe_deployments"] = s.unsafe_deployments;
    summary["confirmations"] = s.confirmations;

    py::list records;
    for (const auto& r : run.records) records.append(record_dict(r));
    py::dict d;
    d["algo"] = to_string(run.algo);
    d["seed"] = run.seed;
    d["records"] = records;
    d["summary"] = summary;
    d["trajectories"] = run.trajectories.size();
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "divexp C++ core";

    py::enum_<DomainKind>(m, "DomainKind")
        .value("GridWorld", DomainKind::GridWorld)
        .value("MountainCar", DomainKind::MountainCar)
        .value("Acrobot", DomainKind::Acrobot);
    py::enum_<Algo>(m, "Algo").value("DE", Algo::DE).value("SPI", Algo::SPI);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_static("defaults_for", &ExperimentConfig::defaults_for, py::arg("domain"))
        .def("validate", &ExperimentConfig::validate)
        .def_readwrite("domain", &ExperimentConfig::domain)
        .def_readwrite("iterations", &ExperimentConfig::iterations)
        .def_readwrite("trajectories", &ExperimentConfig::trajectories)
        .def_readwrite("candidates", &ExperimentConfig::candidates)
        .def_readwrite("delta", &ExperimentConfig::delta)
        .def_readwrite("alpha", &ExperimentConfig::alpha)
        .def_readwrite("train_numerator", &ExperimentConfig::train_numerator)
        .def_readwrite("train_denominator", &ExperimentConfig::train_denominator)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def_readwrite("support_floor", &ExperimentConfig::support_floor)
        .def_readwrite("fourier_order", &ExperimentConfig::fourier_order)
        .def_readwrite("value_rollouts", &ExperimentConfig::value_rollouts)
        .def(py::self == py::self);

    m.def(
        "parse_config",
        [](const std::string& text) {
            std::istringstream in(text);
            return parse_config(in);
        },
        py::arg("text"), "Parse `key = value` config text.");
    m.def(
        "write_config",
        [](const ExperimentConfig& c) {
            std::ostringstream out;
            write_config(out, c);
            return out.str();
        },
        py::arg("config"));
    m.def("config_hash", &config_hash, py::arg("config"));

    m.def(
        "run_experiment",
        [](const ExperimentConfig& c, Algo algo) {
            RunResult run;
            {
                py::gil_scoped_release release;
                run = algo == Algo::SPI ? run_spi_baseline(c) : run_experiment(c, algo);
            }
            return run_dict(run);
        },
        py::arg("config"), py::arg("algo") = Algo::DE,
        "Run one seeded experiment; returns per-iteration records and a summary.");

    m.def(
        "t_lower_bound", [](const std::vector<double>& x, double delta) { return t_lower_bound(x, delta); },
        py::arg("samples"), py::arg("delta"));
    m.def(
        "t_p_value", [](const std::vector<double>& x, double rho) { return t_p_value(x, rho); }, py::arg("samples"),
        py::arg("rho"));
    m.def(
        "bh_select",
        [](const std::vector<std::pair<std::string, double>>& p, double delta) { return bh_select(p, delta); },
        py::arg("p_values"), py::arg("delta"));
    m.def("student_t_cdf", &stats::student_t_cdf, py::arg("t"), py::arg("dof"));
    m.def("student_t_quantile", &stats::student_t_quantile, py::arg("p"), py::arg("dof"));

    m.def("max_l1_bound", &theory::max_l1_bound, py::arg("allocation"));
    m.def("gridworld_optimal_policies", &grid::optimal_family_indices);
    m.def(
        "gridworld_policy_quality", [](std::int64_t index) { return grid::policy_quality(index); },
        py::arg("index"), "Extra steps to goal summed over interior states.");
}
