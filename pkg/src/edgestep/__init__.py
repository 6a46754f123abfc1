"""Preferential attachment with edge-step functions: simulation, exact
expectations, and regular-variation diagnostics."""
from .edge_step import (
    Constant,
    DomainError,
    EdgeStepSpec,
    ExpNegLogDelta,
    InverseLogLog,
    InverseLogPower,
    PowerLaw,
    UnsupportedRegimeError,
    evaluate,
    expected_vertices,
    format_spec,
    parse_spec,
)
from .process import advance, new_initial, run_to, sample_preferential, snapshot_histogram
from .theory import evolve_expectations, expected_ratio, p_gamma

__all__ = [
    "Constant",
    "DomainError",
    "EdgeStepSpec",
    "ExpNegLogDelta",
    "InverseLogLog",
    "InverseLogPower",
    "PowerLaw",
    "UnsupportedRegimeError",
    "advance",
    "evaluate",
    "evolve_expectations",
    "expected_ratio",
    "expected_vertices",
    "format_spec",
    "new_initial",
    "p_gamma",
    "parse_spec",
    "run_to",
    "sample_preferential",
    "snapshot_histogram",
]
