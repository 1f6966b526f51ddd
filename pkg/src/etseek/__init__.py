"""Event-triggered extremum seeking on unknown quadratic maps.

Simulates gradient and Newton seeking loops (continuous and event-triggered
variants) against a ground-truth quadratic map, and verifies the loop
against its averaged counterpart: Lyapunov certificates, convergence
envelopes, inter-event bounds, and the frequency-scaling trajectory gap.
"""

from .control import ControlSample, ControlScheme, ControllerGains
from .estimators import RiccatiState, gradient_estimate, hessian_estimate, riccati_rhs
from .plant import ExtremumKind, QuadraticMap
from .signals import (
    DitherDesign,
    ValidationReport,
    check_probing_frequencies,
    common_period,
    demod,
    dither,
    hessian_probe,
)
from .sim import LoopState, RunResult, Scenario, SimulationDiverged, Trajectory, run, run_comparison, step
from .trigger import EventLog, TriggerConfig, TriggerState, fire, trigger_margin, zeno_lower_bound

__version__ = "0.1.0"

__all__ = [
    "ControlSample",
    "ControlScheme",
    "ControllerGains",
    "DitherDesign",
    "EventLog",
    "ExtremumKind",
    "LoopState",
    "QuadraticMap",
    "RiccatiState",
    "RunResult",
    "Scenario",
    "SimulationDiverged",
    "Trajectory",
    "TriggerConfig",
    "TriggerState",
    "ValidationReport",
    "check_probing_frequencies",
    "common_period",
    "demod",
    "dither",
    "fire",
    "gradient_estimate",
    "hessian_estimate",
    "hessian_probe",
    "riccati_rhs",
    "run",
    "run_comparison",
    "step",
    "trigger_margin",
    "zeno_lower_bound",
]
