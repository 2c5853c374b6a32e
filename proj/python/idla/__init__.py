"""Internal DLA on the cylinder: thin wrapper over the C++ core."""

from ._idla import (
    Cluster,
    CouplingOutcome,
    Site,
    discrepancy,
    exact_exit_distribution,
    fluctuation_check,
    gff_variance,
    imbalance,
    psi,
    return_distribution,
    run_idla,
    run_shifted_idla,
    sample_vertical_hitting_time,
    smash_sum,
    solve_qn,
    validate,
    walk_until_settle,
    water_level_coupling,
)

__all__ = [
    "Cluster",
    "CouplingOutcome",
    "Site",
    "discrepancy",
    "exact_exit_distribution",
    "fluctuation_check",
    "gff_variance",
    "imbalance",
    "psi",
    "return_distribution",
    "run_idla",
    "run_shifted_idla",
    "sample_vertical_hitting_time",
    "smash_sum",
    "solve_qn",
    "validate",
    "walk_until_settle",
    "water_level_coupling",
]
