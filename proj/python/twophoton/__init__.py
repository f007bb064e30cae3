"""Python interface to the two-photon detector simulation engine."""

from ._core import (
    ConfigError,
    PreconditionError,
    derive_circuit,
    false_click_probability,
    fidelity,
    reference_set,
    simulate,
    solve_jpm,
)

__all__ = [
    "ConfigError",
    "PreconditionError",
    "derive_circuit",
    "false_click_probability",
    "fidelity",
    "reference_set",
    "simulate",
    "solve_jpm",
]
