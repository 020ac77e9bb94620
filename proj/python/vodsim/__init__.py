"""Loss-network simulator and placement analytics for P2P video-on-demand."""

from ._vodsim import (
    Config,
    erlang_b,
    exact_ctmc_loss,
    hall_check,
    is_feasible,
    loss_floor,
    optimal_loss,
    placement,
    recipe_names,
    run_experiment,
    run_plan,
    simulate,
    validate,
    water_filling,
    zipf_popularity,
)

__all__ = [
    "Config",
    "erlang_b",
    "exact_ctmc_loss",
    "hall_check",
    "is_feasible",
    "loss_floor",
    "optimal_loss",
    "placement",
    "recipe_names",
    "run_experiment",
    "run_plan",
    "simulate",
    "validate",
    "water_filling",
    "zipf_popularity",
]
__version__ = "0.1.0"
