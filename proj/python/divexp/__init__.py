"""Python bindings for the divexp C++ core."""

from ._core import (
    Algo,
    DomainKind,
    ExperimentConfig,
    bh_select,
    config_hash,
    gridworld_optimal_policies,
    gridworld_policy_quality,
    max_l1_bound,
    parse_config,
    run_experiment,
    student_t_cdf,
    student_t_quantile,
    t_lower_bound,
    t_p_value,
    write_config,
)

__all__ = [
    "Algo",
    "DomainKind",
    "ExperimentConfig",
    "bh_select",
    "config_hash",
    "gridworld_optimal_policies",
    "gridworld_policy_quality",
    "max_l1_bound",
    "parse_config",
    "run_experiment",
    "student_t_cdf",
    "student_t_quantile",
    "t_lower_bound",
    "t_p_value",
    "write_config",
]
