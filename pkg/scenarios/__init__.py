from .experiments import (
    SCENARIOS,
    ScenarioResult,
    ScenarioSpec,
    TargetCheck,
    get_scenario,
    scenario_compensation,
    scenario_elimination_check,
    scenario_feasibility,
    scenario_fig3,
    scenario_fig4,
    scenario_fig5,
    scenario_robustness,
)
from .sweep import REAL_AXES, SweepSpec, run_sweep

__all__ = [
    "REAL_AXES",
    "SCENARIOS",
    "ScenarioResult",
    "ScenarioSpec",
    "SweepSpec",
    "TargetCheck",
    "get_scenario",
    "run_sweep",
    "scenario_compensation",
    "scenario_elimination_check",
    "scenario_feasibility",
    "scenario_fig3",
    "scenario_fig4",
    "scenario_fig5",
    "scenario_robustness",
]
