"""Periodic traveling waves on lattices: thin wrapper over the compiled core."""

from ._core import (  # noqa: F401
    LatwaveError,
    System,
    Wave,
    dk_omega,
    fit_rd,
    make_system,
    multipliers,
    rd_whitham,
    report,
    run,
    seed_wave,
    solve_profile,
)

__all__ = [
    "LatwaveError",
    "System",
    "Wave",
    "dk_omega",
    "fit_rd",
    "make_system",
    "multipliers",
    "rd_whitham",
    "report",
    "run",
    "seed_wave",
    "solve_profile",
]
