"""Stochastic bilevel optimization with normalized momentum updates."""

from ._core import (
    BilevelProblem,
    ConfigError,
    NoiseModel,
    ParamSchedule,
    SchedulingError,
    SmoothnessConstants,
    SolverError,
    derive_constants,
    hyperclean,
    hyperclean_weights,
    practical_schedule,
    q2,
    random_quadratic,
    read_trace,
    render_svg,
    run,
    run_config,
    suite_names,
    sweep,
    theorem_schedule,
    unbounded_smooth,
    verify,
)

__all__ = [
    "BilevelProblem",
    "ConfigError",
    "NoiseModel",
    "ParamSchedule",
    "SchedulingError",
    "SmoothnessConstants",
    "SolverError",
    "derive_constants",
    "hyperclean",
    "hyperclean_weights",
    "practical_schedule",
    "q2",
    "random_quadratic",
    "read_trace",
    "render_svg",
    "run",
    "run_config",
    "suite_names",
    "sweep",
    "theorem_schedule",
    "unbounded_smooth",
    "verify",
]
