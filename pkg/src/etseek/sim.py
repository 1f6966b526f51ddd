"""Fixed-step closed-loop integration of the seeking loops.

One classical 4th-order Runge-Kutta step advances the parameter estimate
and (for Newton schemes) the Riccati filter with the control input held
constant, so the zero-order hold is exact and never interpolated.  The
trigger margin is sampled once per step, after the state update; events
are stamped at the step end unless bisection refinement is enabled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .control import (
    ControlSample,
    ControlScheme,
    ControllerGains,
    control_gradient_continuous,
    control_newton,
)
from .estimators import RiccatiState, gradient_estimate, riccati_rhs
from .linalg import is_hurwitz
from .plant import QuadraticMap
from .signals import DitherDesign, common_period, demod, dither, hessian_probe
from .trigger import EventLog, TriggerConfig, TriggerState, fire, trigger_margin

__all__ = [
    "Scenario",
    "LoopState",
    "StepObservables",
    "Trajectory",
    "RunResult",
    "SimulationDiverged",
    "default_step",
    "initial_state",
    "step",
    "run",
    "run_comparison",
]


class SimulationDiverged(RuntimeError):
    """Raised when the integrated state leaves the finite/bounded regime."""


def default_step(design: DitherDesign) -> float:
    """Default step: 1/200 of the fastest dither period."""
    t_fast = 2.0 * math.pi / float(np.max(design.omega_values))
    return t_fast / 200.0


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one closed-loop run, deterministically."""

    map: QuadraticMap
    design: DitherDesign
    gains: ControllerGains
    trigger: Optional[TriggerConfig]
    theta_hat0: np.ndarray
    gamma0: Optional[np.ndarray] = None
    omega_r: float = 0.05
    step_h: Optional[float] = None
    t_end: float = 100.0
    stride: int = 10
    riccati_ceiling: float = 1e6
    refine_events: bool = False
    label: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "theta_hat0", np.array(self.theta_hat0, dtype=float))
        if self.gamma0 is not None:
            object.__setattr__(self, "gamma0", np.array(self.gamma0, dtype=float))

    @property
    def h(self) -> float:
        return self.step_h if self.step_h is not None else default_step(self.design)

    def validate(self) -> None:
        """Cross-module invariants checked once before a run."""
        n = self.map.dim
        if self.design.n != n:
            raise ValueError("dither dimension does not match the map dimension")
        if self.gains.n != n:
            raise ValueError("gain dimension does not match the map dimension")
        if self.theta_hat0.shape != (n,):
            raise ValueError("theta_hat0 dimension does not match the map dimension")
        report = self.design.validate_frequencies()
        if not report.ok:
            raise ValueError(f"probing frequencies rejected: {report.summary()}")
        if self.gains.scheme.is_event_triggered and self.trigger is None:
            raise ValueError("event-triggered schemes require a trigger configuration")
        if self.gains.scheme.is_newton:
            if self.gamma0 is None:
                raise ValueError("Newton schemes require an initial filter state gamma0")
            if self.gamma0.shape != (n, n):
                raise ValueError("gamma0 must be an n-by-n matrix")
            if not (self.omega_r > 0.0 and math.isfinite(self.omega_r)):
                raise ValueError("omega_r must be positive")
        else:
            # Simulation-side check only: the plant curvature is unknown to a
            # real deployment, so this cannot be verified outside a simulator.
            if not is_hurwitz(self.map.h_star @ self.gains.K):
                raise ValueError(
                    "gradient scheme requires the curvature/gain product to be Hurwitz"
                )
        if not (self.h > 0.0 and math.isfinite(self.h)):
            raise ValueError("step size must be positive")
        if self.t_end < 0.0:
            raise ValueError("horizon must be nonnegative")
        if self.stride < 1:
            raise ValueError("stride must be a positive integer")


@dataclass(frozen=True)
class StepObservables:
    """Post-step measurements cached on the state.

    ``probe`` is the curvature-probe/measurement product at the state time;
    keeping it lets the next step reuse this evaluation as its first
    Runge-Kutta stage, since the step end of one step is the start of the
    next and the held input does not change in between.
    """

    y: float
    ghat: np.ndarray
    z: np.ndarray
    margin: float
    fired: bool
    probe: Optional[np.ndarray] = None


@dataclass(frozen=True)
class LoopState:
    t: float
    theta_hat: np.ndarray
    gamma: Optional[np.ndarray]
    trigger_state: Optional[TriggerState]
    held_u: ControlSample
    obs: StepObservables


@dataclass
class Trajectory:
    """Uniformly strided samples of the closed loop."""

    t: np.ndarray
    theta: np.ndarray
    y: np.ndarray
    theta_hat: np.ndarray
    ghat: np.ndarray
    u: np.ndarray
    gamma: np.ndarray
    margin: np.ndarray
    stride: int
    h: float

    @property
    def n(self) -> int:
        return self.theta.shape[1]

    def column_names(self) -> list[str]:
        n = self.n
        names = ["t"]
        names += [f"theta_{i+1}" for i in range(n)]
        names += ["y"]
        names += [f"theta_hat_{i+1}" for i in range(n)]
        names += [f"Ghat_{i+1}" for i in range(n)]
        names += [f"u_{i+1}" for i in range(n)]
        names += [f"Gamma_{i+1}{j+1}" for i in range(n) for j in range(n)]
        names += ["margin"]
        return names

    def as_matrix(self) -> np.ndarray:
        return np.column_stack(
            [
                self.t,
                self.theta,
                self.y,
                self.theta_hat,
                self.ghat,
                self.u,
                self.gamma,
                self.margin,
            ]
        )


@dataclass
class RunResult:
    trajectory: Trajectory
    events: Optional[EventLog]
    summary: dict


def _law(gains: ControllerGains, z: np.ndarray) -> np.ndarray:
    if gains.scheme.is_newton:
        return control_newton(gains, z)
    return control_gradient_continuous(gains, z)


def _decision_signal(scheme: ControlScheme, gamma, ghat: np.ndarray) -> np.ndarray:
    return gamma @ ghat if scheme.is_newton else ghat


def _probe_at(scenario: Scenario, t: float, theta_hat) -> np.ndarray:
    y = scenario.map.evaluate(theta_hat + dither(scenario.design, t))
    return hessian_probe(scenario.design, t) * y


def initial_state(scenario: Scenario) -> tuple[LoopState, Optional[EventLog]]:
    """State at t=0.

    The held decision signal is initialized to its t=0 value and logged as
    the first event, so the measurement error is exactly zero at start.
    """
    newton = scenario.gains.scheme.is_newton
    gamma0 = scenario.gamma0.copy() if newton else None
    y0 = scenario.map.evaluate(scenario.theta_hat0 + dither(scenario.design, 0.0))
    ghat0 = gradient_estimate(demod(scenario.design, 0.0), y0)
    z0 = _decision_signal(scenario.gains.scheme, gamma0, ghat0)
    probe0 = hessian_probe(scenario.design, 0.0) * y0 if newton else None
    held_u = ControlSample(u=_law(scenario.gains, z0), computed_at=0.0)
    log: Optional[EventLog] = None
    trig: Optional[TriggerState] = None
    margin0 = math.nan
    if scenario.gains.scheme.is_event_triggered:
        log = EventLog()
        log.append(0.0)
        trig = TriggerState(held_z=z0, last_event_time=0.0)
        margin0 = trigger_margin(z0, trig, scenario.trigger)
    state = LoopState(
        t=0.0,
        theta_hat=scenario.theta_hat0.copy(),
        gamma=gamma0,
        trigger_state=trig,
        held_u=held_u,
        obs=StepObservables(
            y=y0, ghat=ghat0, z=z0, margin=margin0, fired=False, probe=probe0
        ),
    )
    return state, log


def _advance(scenario: Scenario, t0: float, theta0, gamma0, u, h: float, probe0=None):
    """One RK4 step of the coupled dynamics with u frozen.

    The parameter estimate moves linearly (its derivative is exactly the
    held input), so only the Riccati filter needs the full stage structure.
    The two midpoint stages share one plant/probe evaluation because the
    estimate midpoint does not depend on the filter state, and the probe at
    the step end is returned for reuse as the next step's first stage.

    Returns ``(theta1, gamma1, y1, probe1)``; the measurement and probe are
    None for the gradient schemes.
    """
    theta1 = theta0 + h * u
    if gamma0 is None:
        return theta1, None, None, None
    wr = scenario.omega_r
    ev = scenario.map.evaluate
    design = scenario.design
    half = 0.5 * h

    if probe0 is None:
        probe0 = _probe_at(scenario, t0, theta0)
    theta_mid = theta0 + half * u
    y_mid = ev(theta_mid + dither(design, t0 + half))
    probe_mid = hessian_probe(design, t0 + half) * y_mid
    y1 = ev(theta1 + dither(design, t0 + h))
    probe1 = hessian_probe(design, t0 + h) * y1

    k1 = wr * (gamma0 - gamma0 @ probe0 @ gamma0)
    g2 = gamma0 + half * k1
    k2 = wr * (g2 - g2 @ probe_mid @ g2)
    g3 = gamma0 + half * k2
    k3 = wr * (g3 - g3 @ probe_mid @ g3)
    g4 = gamma0 + h * k3
    k4 = wr * (g4 - g4 @ probe1 @ g4)
    gamma1 = gamma0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return theta1, gamma1, y1, probe1


def _check_finite(scenario: Scenario, t: float, theta_hat, gamma) -> None:
    if not np.all(np.isfinite(theta_hat)):
        raise SimulationDiverged(f"non-finite parameter estimate at t={t:.6g}")
    if gamma is not None:
        if not np.all(np.isfinite(gamma)):
            raise SimulationDiverged(f"non-finite Riccati state at t={t:.6g}")
        ceiling = scenario.riccati_ceiling * max(
            1.0, float(np.linalg.norm(scenario.gamma0))
        )
        norm = float(np.linalg.norm(gamma))
        if norm > ceiling:
            raise SimulationDiverged(
                f"Riccati state norm {norm:.3g} exceeded the ceiling {ceiling:.3g} "
                f"at t={t:.6g}; the filter left its region of attraction"
            )


def _refine_event_time(scenario: Scenario, state: LoopState, h: float) -> float:
    """Bisection for the first margin crossing inside the current step.

    Returns the substep length s in (0, h] at which the margin first goes
    negative, located to within 1e-10*h.  Each trial integrates a single
    RK4 substep from the stored step-start state.
    """
    cfg = scenario.trigger
    trig = state.trigger_state
    u = state.held_u.u

    def margin_at(s: float) -> float:
        th, g = _advance(scenario, state.t, state.theta_hat, state.gamma, u, s)
        _, _, z = _evaluate(scenario, state.t + s, th, g)
        return trigger_margin(z, trig, cfg)

    lo, hi = 0.0, h
    while hi - lo > 1e-10 * h:
        mid = 0.5 * (lo + hi)
        if margin_at(mid) < 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def step(
    state: LoopState,
    scenario: Scenario,
    h: float,
    log: Optional[EventLog] = None,
) -> LoopState:
    """Advance the loop by one step, then sample the trigger.

    Continuous schemes refresh the control at every step boundary; the
    event-triggered schemes refresh it only when the sampled margin is
    negative, at which instant the held signal is re-anchored.
    """
    if not h > 0.0:
        raise ValueError("step size must be positive")
    scheme = scenario.gains.scheme
    u = state.held_u.u
    t1 = state.t + h
    fired = False
    trig = state.trigger_state
    held_u = state.held_u

    if scheme.is_event_triggered and scenario.refine_events:
        theta_mid, gamma_mid = _advance(
            scenario, state.t, state.theta_hat, state.gamma, u, h
        )
        _, _, z_probe = _evaluate(scenario, t1, theta_mid, gamma_mid)
        if trigger_margin(z_probe, trig, scenario.trigger) < 0.0:
            s = _refine_event_time(scenario, state, h)
            if s < h:
                theta_s, gamma_s = _advance(
                    scenario, state.t, state.theta_hat, state.gamma, u, s
                )
                _, _, z_s = _evaluate(scenario, state.t + s, theta_s, gamma_s)
                trig = fire(trig, log, z_s, state.t + s)
                held_u = ControlSample(u=_law(scenario.gains, z_s), computed_at=state.t + s)
                fired = True
                theta1, gamma1 = _advance(
                    scenario, state.t + s, theta_s, gamma_s, held_u.u, h - s
                )
            else:
                theta1, gamma1 = theta_mid, gamma_mid
        else:
            theta1, gamma1 = theta_mid, gamma_mid
    else:
        theta1, gamma1 = _advance(scenario, state.t, state.theta_hat, state.gamma, u, h)

    _check_finite(scenario, t1, theta1, gamma1)
    y1, ghat1, z1 = _evaluate(scenario, t1, theta1, gamma1)

    margin = math.nan
    if scheme.is_event_triggered:
        margin = trigger_margin(z1, trig, scenario.trigger)
        if margin < 0.0:
            trig = fire(trig, log, z1, t1)
            held_u = ControlSample(u=_law(scenario.gains, z1), computed_at=t1)
            fired = True
    else:
        held_u = ControlSample(u=_law(scenario.gains, z1), computed_at=t1)

    return LoopState(
        t=t1,
        theta_hat=theta1,
        gamma=gamma1,
        trigger_state=trig,
        held_u=held_u,
        obs=StepObservables(y=y1, ghat=ghat1, z=z1, margin=margin, fired=fired),
    )


def run(scenario: Scenario) -> RunResult:
    """Integrate the closed loop over [0, T_end] and collect the record."""
    scenario.validate()
    h = scenario.h
    n_steps = int(math.floor(scenario.t_end / h + 1e-9))
    state, log = initial_state(scenario)

    n = scenario.map.dim
    rows_t: list[float] = []
    rows: list[np.ndarray] = []

    def record(st: LoopState) -> None:
        s_t = dither(scenario.design, st.t)
        gamma_flat = st.gamma.ravel() if st.gamma is not None else np.zeros(n * n)
        rows_t.append(st.t)
        rows.append(
            np.concatenate(
                [
                    st.theta_hat + s_t,
                    [st.obs.y],
                    st.theta_hat,
                    st.obs.ghat,
                    st.held_u.u,
                    gamma_flat,
                    [st.obs.margin],
                ]
            )
        )

    theta_star = scenario.map.theta_star
    two_a = 2.0 * scenario.design.rss_amplitude
    conv_time = math.nan
    if float(np.linalg.norm(state.theta_hat - theta_star)) <= two_a:
        conv_time = 0.0
    record(state)

    min_margin = math.inf
    for k in range(1, n_steps + 1):
        state = step(state, scenario, h, log)
        if not state.obs.fired and not math.isnan(state.obs.margin):
            min_margin = min(min_margin, state.obs.margin)
        if math.isnan(conv_time):
            if float(np.linalg.norm(state.theta_hat - theta_star)) <= two_a:
                conv_time = state.t
        if k % scenario.stride == 0 or k == n_steps:
            record(state)

    m = np.array(rows)
    traj = Trajectory(
        t=np.array(rows_t),
        theta=m[:, 0:n],
        y=m[:, n],
        theta_hat=m[:, n + 1 : 2 * n + 1],
        ghat=m[:, 2 * n + 1 : 3 * n + 1],
        u=m[:, 3 * n + 1 : 4 * n + 1],
        gamma=m[:, 4 * n + 1 : 4 * n + 1 + n * n],
        margin=m[:, 4 * n + 1 + n * n],
        stride=scenario.stride,
        h=h,
    )

    final_theta = traj.theta[-1]
    summary = {
        "label": scenario.label,
        "scheme": scenario.gains.scheme.value,
        "h": h,
        "t_end": n_steps * h,
        "n_steps": n_steps,
        "update_count": log.count if log is not None else n_steps + 1,
        "final_theta_err": float(np.linalg.norm(final_theta - theta_star)),
        "final_theta_hat_err": float(np.linalg.norm(traj.theta_hat[-1] - theta_star)),
        "final_y_err": float(abs(traj.y[-1] - scenario.map.q_star)),
        "min_inter_event": log.min_gap if log is not None else math.nan,
        "mean_inter_event": log.mean_gap if log is not None else math.nan,
        "convergence_time_2a": conv_time,
        "min_nonevent_margin": min_margin if log is not None else math.nan,
    }
    return RunResult(trajectory=traj, events=log, summary=summary)


def run_comparison(scenarios: Sequence[Scenario]):
    """Run several scenarios and assemble the side-by-side report."""
    from .report import build_report  # deferred: report pulls in analysis

    if len(scenarios) == 0:
        raise ValueError("at least one scenario is required")
    results = [run(sc) for sc in scenarios]
    return build_report(scenarios, results)
