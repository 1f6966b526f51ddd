"""Verification mathematics for the seeking loops.

Certificates for the stability assumptions, the trigger-weight lower bound,
the averaged closed loop with its own event mechanism, convergence envelopes
with calibrated residual constants, and the trajectory gap between the full
and averaged systems.  Everything here may use the plant's ground truth: it
is analysis/oracle machinery, not a deployable controller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .linalg import (
    eigenvalues,
    is_hurwitz,
    spectral_norm,
    symmetric_eigvals,
    symmetric_inverse,
)
from .sim import Scenario, Trajectory, RunResult
from .trigger import EventLog, TriggerConfig

__all__ = [
    "LyapunovCertificate",
    "solve_lyapunov",
    "alpha_lower_bound",
    "AveragedState",
    "averaged_rhs",
    "AveragedTrajectory",
    "run_averaged",
    "EnvelopeParams",
    "EnvelopeInit",
    "theorem2_envelopes",
    "envelope_params_for",
    "envelope_init_for",
    "observed_envelope_series",
    "calibrate_envelope_constants",
    "check_envelope_dominance",
    "averaging_gap",
]


# ---------------------------------------------------------------------------
# Lyapunov certificates


@dataclass(frozen=True)
class LyapunovCertificate:
    """P solving A'P + PA + Q = 0, with the achieved residual recorded."""

    p: np.ndarray
    q: np.ndarray
    a: np.ndarray
    residual: float

    def __post_init__(self):
        q_norm = float(np.linalg.norm(self.q))
        if self.residual > 1e-10 * q_norm:
            raise ValueError(
                f"Lyapunov residual {self.residual:.3e} exceeds 1e-10*||Q|| = {1e-10 * q_norm:.3e}"
            )
        if symmetric_eigvals(self.p)[0] <= 0.0:
            raise ValueError("Lyapunov solution is not positive definite")

    @property
    def p_spectrum(self) -> np.ndarray:
        return symmetric_eigvals(self.p)

    @property
    def q_spectrum(self) -> np.ndarray:
        return symmetric_eigvals(self.q)


def solve_lyapunov(a: np.ndarray, q: np.ndarray) -> LyapunovCertificate:
    """Unique symmetric P > 0 with A'P + PA = -Q, for Hurwitz A and Q > 0.

    Solved through the vectorized linear system
    (I kron A' + A' kron I) vec(P) = -vec(Q) in column-major stacking.
    """
    a = np.array(a, dtype=float)
    q = np.array(q, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or q.shape != (n, n):
        raise ValueError("A and Q must be square matrices of equal size")
    if symmetric_eigvals(0.5 * (q + q.T))[0] <= 0.0 or float(
        np.max(np.abs(q - q.T))
    ) > 1e-12 * max(1.0, float(np.max(np.abs(q)))):
        raise ValueError("Q must be symmetric positive definite")
    if not is_hurwitz(a):
        raise ValueError(f"A is not Hurwitz: eigenvalues {eigenvalues(a)}")
    system = np.kron(np.eye(n), a.T) + np.kron(a.T, np.eye(n))
    vec_p = np.linalg.solve(system, -q.flatten(order="F"))
    p = vec_p.reshape((n, n), order="F")
    p = 0.5 * (p + p.T)
    residual = float(np.linalg.norm(a.T @ p + p @ a + q))
    return LyapunovCertificate(p=p, q=q, a=a, residual=residual)


def alpha_lower_bound(cert: LyapunovCertificate, k: np.ndarray, h_star: np.ndarray) -> float:
    """Trigger error weight above which the decay-margin argument closes.

    Evaluates 2*||P K H|| / lambda_min(Q) from the certificate of the
    negated gain matrix.
    """
    k = np.asarray(k, dtype=float)
    lam_min_q = float(symmetric_eigvals(cert.q)[0])
    return 2.0 * spectral_norm(cert.p @ k @ np.asarray(h_star, dtype=float)) / lam_min_q


# ---------------------------------------------------------------------------
# Averaged closed loop


@dataclass(frozen=True)
class AveragedState:
    """Averaged gradient estimate, parameter error, filter error, and the
    held-minus-current error that the average trigger monitors."""

    ghat: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray
    e: np.ndarray


def averaged_rhs(
    state: AveragedState,
    k_diag: np.ndarray,
    h_star: np.ndarray,
    omega: float,
    omega_r: float,
    linearized: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Derivatives of the averaged system in the rescaled time t_bar = w*t.

    The nonlinear variant keeps the quadratic filter/parameter couplings;
    the linearized variant drops them.
    """
    k = np.asarray(k_diag, dtype=float)
    h = np.asarray(h_star, dtype=float)
    h_inv = symmetric_inverse(h)
    kg = k[:, None] * state.gamma  # K @ Gamma_tilde, diagonal K
    d_ghat = -h @ (k * (h_inv @ state.ghat)) - h @ (k * state.e)
    d_theta = -k * state.theta - k * state.e
    d_gamma = -omega_r * state.gamma
    if not linearized:
        d_ghat = d_ghat - h @ (kg @ state.ghat)
        d_theta = d_theta - kg @ (h @ state.theta)
        d_gamma = d_gamma - omega_r * state.gamma @ h @ state.gamma
    return d_ghat / omega, d_theta / omega, d_gamma / omega


@dataclass
class AveragedTrajectory:
    """Strided samples of the averaged loop, reported in original time."""

    t: np.ndarray
    theta_tilde: np.ndarray
    ghat: np.ndarray
    gamma_tilde: np.ndarray
    margin: np.ndarray


def run_averaged(
    scenario: Scenario, linearized: bool = False
) -> tuple[AveragedTrajectory, EventLog]:
    """Integrate the averaged loop with the average trigger and held control.

    Time stepping happens in the rescaled time with step w*h, which lands
    the samples on exactly the same original-time grid as the full run.
    The average trigger compares the parameter error against its held
    value; both require the true optimizer, which is fine here because the
    averaged system is an analysis oracle, not a deployable controller.
    """
    scenario.validate()
    if not scenario.gains.scheme.is_newton:
        raise ValueError("the averaged loop is defined for the Newton schemes")
    cfg = scenario.trigger if scenario.trigger is not None else TriggerConfig(0.5, 1.0)
    h_star = scenario.map.h_star
    h_inv = symmetric_inverse(h_star)
    k_diag = np.asarray(scenario.gains.k_diag)
    omega = scenario.design.base_omega
    omega_r = scenario.omega_r
    et = scenario.gains.scheme.is_event_triggered

    h_bar = omega * scenario.h
    n_steps = int(math.floor(scenario.t_end / scenario.h + 1e-9))

    theta = scenario.theta_hat0 - scenario.map.theta_star
    ghat = h_star @ theta
    gamma = scenario.gamma0 - h_inv
    held = theta.copy()

    log = EventLog()
    log.append(0.0)

    def rhs(gh, th, gm):
        st = AveragedState(ghat=gh, theta=th, gamma=gm, e=held - th)
        return averaged_rhs(st, k_diag, h_star, omega, omega_r, linearized)

    rows_t = [0.0]
    rows_theta = [theta.copy()]
    rows_ghat = [ghat.copy()]
    rows_gamma = [gamma.ravel().copy()]
    rows_margin = [cfg.sigma * float(np.linalg.norm(theta))]

    for kstep in range(1, n_steps + 1):
        k1 = rhs(ghat, theta, gamma)
        k2 = rhs(
            ghat + 0.5 * h_bar * k1[0],
            theta + 0.5 * h_bar * k1[1],
            gamma + 0.5 * h_bar * k1[2],
        )
        k3 = rhs(
            ghat + 0.5 * h_bar * k2[0],
            theta + 0.5 * h_bar * k2[1],
            gamma + 0.5 * h_bar * k2[2],
        )
        k4 = rhs(ghat + h_bar * k3[0], theta + h_bar * k3[1], gamma + h_bar * k3[2])
        ghat = ghat + (h_bar / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        theta = theta + (h_bar / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        gamma = gamma + (h_bar / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        t = kstep * scenario.h

        margin = cfg.sigma * float(np.linalg.norm(theta)) - cfg.alpha * float(
            np.linalg.norm(held - theta)
        )
        if et and margin < 0.0:
            held = theta.copy()
            log.append(t)
        if not et:
            held = theta.copy()

        if kstep % scenario.stride == 0 or kstep == n_steps:
            rows_t.append(t)
            rows_theta.append(theta.copy())
            rows_ghat.append(ghat.copy())
            rows_gamma.append(gamma.ravel().copy())
            rows_margin.append(margin)

    traj = AveragedTrajectory(
        t=np.array(rows_t),
        theta_tilde=np.array(rows_theta),
        ghat=np.array(rows_ghat),
        gamma_tilde=np.array(rows_gamma),
        margin=np.array(rows_margin),
    )
    return traj, log


# ---------------------------------------------------------------------------
# Convergence envelopes


@dataclass(frozen=True)
class EnvelopeParams:
    """Spectra and constants entering the four convergence envelopes.

    The asymptotic residuals are represented by configurable constants
    c_theta*(a + 1/w), c_y*(a^2 + 1/w^2), c_ghat/w, c_gamma/w; the
    defaults of zero give the bare exponential parts.
    """

    lam_min_q: float
    lam_max_p1: float
    lam_min_p1: float
    curvature_ratio: float  # lambda_max / lambda_min of (-1)**op H
    cond_h: float  # ||H|| * ||H^-1||
    sigma: float
    omega: float
    omega_r: float
    a: float
    c_theta: float = 0.0
    c_y: float = 0.0
    c_ghat: float = 0.0
    c_gamma: float = 0.0

    def __post_init__(self):
        if self.lam_min_q <= 0.0 or self.lam_max_p1 <= 0.0 or self.lam_min_p1 <= 0.0:
            raise ValueError("certificate spectra must be positive")

    @property
    def decay_rate(self) -> float:
        """Half the certified quadratic-form decay, per unit time."""
        return 0.5 * (self.lam_min_q / self.lam_max_p1) * (1.0 - self.sigma)

    @property
    def residuals(self) -> dict:
        return {
            "theta": self.c_theta * (self.a + 1.0 / self.omega),
            "y": self.c_y * (self.a**2 + 1.0 / self.omega**2),
            "ghat": self.c_ghat / self.omega,
            "gamma": self.c_gamma / self.omega,
        }


@dataclass(frozen=True)
class EnvelopeInit:
    theta_err: float
    y_err: float
    ghat_norm: float
    gamma_err: float


def theorem2_envelopes(params: EnvelopeParams, init: EnvelopeInit, t: np.ndarray) -> dict:
    """Evaluate the four envelope right-hand sides on a time grid."""
    t = np.asarray(t, dtype=float)
    cond_p = params.lam_max_p1 / params.lam_min_p1
    rate = params.decay_rate
    res = params.residuals
    env_theta = np.sqrt(cond_p) * np.exp(-rate * t) * init.theta_err + res["theta"]
    env_y = (
        2.0 * params.curvature_ratio * cond_p * np.exp(-2.0 * rate * t) * init.y_err
        + res["y"]
    )
    env_ghat = np.sqrt(cond_p) * params.cond_h * np.exp(-rate * t) * init.ghat_norm + res[
        "ghat"
    ]
    env_gamma = np.exp(-params.omega_r * t) * init.gamma_err + res["gamma"]
    return {"theta": env_theta, "y": env_y, "ghat": env_ghat, "gamma": env_gamma}


def envelope_params_for(scenario: Scenario, q: Optional[np.ndarray] = None) -> EnvelopeParams:
    """Assemble envelope spectra for a scenario from its certificates."""
    n = scenario.map.dim
    q = np.eye(n) if q is None else np.asarray(q, dtype=float)
    cert = solve_lyapunov(-scenario.gains.K, q)
    p_spec = cert.p_spectrum
    q_spec = cert.q_spectrum
    h = scenario.map.h_star
    op = scenario.map.extremum_kind().op
    h_eigs = symmetric_eigvals((-1.0) ** op * h)
    return EnvelopeParams(
        lam_min_q=float(q_spec[0]),
        lam_max_p1=float(p_spec[-1]),
        lam_min_p1=float(p_spec[0]),
        curvature_ratio=float(h_eigs[-1] / h_eigs[0]),
        cond_h=spectral_norm(h) * spectral_norm(symmetric_inverse(h)),
        sigma=scenario.trigger.sigma if scenario.trigger is not None else 0.0,
        omega=scenario.design.base_omega,
        omega_r=scenario.omega_r,
        a=scenario.design.rss_amplitude,
    )


def envelope_init_for(scenario: Scenario, traj: Trajectory) -> EnvelopeInit:
    """Initial-condition magnitudes entering the envelopes, from the record."""
    theta_star = scenario.map.theta_star
    h_inv = symmetric_inverse(scenario.map.h_star)
    gamma0 = traj.gamma[0].reshape(h_inv.shape)
    return EnvelopeInit(
        theta_err=float(np.linalg.norm(traj.theta[0] - theta_star)),
        y_err=float(abs(traj.y[0] - scenario.map.q_star)),
        ghat_norm=float(np.linalg.norm(traj.ghat[0])),
        gamma_err=float(np.linalg.norm(gamma0 - h_inv)),
    )


def observed_envelope_series(scenario: Scenario, traj: Trajectory) -> dict:
    """The four observed magnitudes the envelopes must dominate."""
    theta_star = scenario.map.theta_star
    h_inv = symmetric_inverse(scenario.map.h_star)
    n = scenario.map.dim
    gamma_err = np.linalg.norm(
        traj.gamma.reshape(-1, n, n) - h_inv[None, :, :], axis=(1, 2)
    )
    return {
        "theta": np.linalg.norm(traj.theta - theta_star, axis=1),
        "y": np.abs(traj.y - scenario.map.q_star),
        "ghat": np.linalg.norm(traj.ghat, axis=1),
        "gamma": gamma_err,
    }


def calibrate_envelope_constants(
    scenario: Scenario,
    traj: Trajectory,
    params: EnvelopeParams,
    init: EnvelopeInit,
    tail_fraction: float = 0.2,
) -> EnvelopeParams:
    """Set the residual constants from the steady-state ripple.

    Each constant is the smallest value making its envelope cover the final
    ``tail_fraction`` of the run (where the exponential part has decayed),
    so dominance over the whole run remains a falsifiable claim about the
    transient.
    """
    observed = observed_envelope_series(scenario, traj)
    raw = theorem2_envelopes(replace(params, c_theta=0, c_y=0, c_ghat=0, c_gamma=0),
                             init, traj.t)
    start = int(len(traj.t) * (1.0 - tail_fraction))
    basis = {
        "theta": params.a + 1.0 / params.omega,
        "y": params.a**2 + 1.0 / params.omega**2,
        "ghat": 1.0 / params.omega,
        "gamma": 1.0 / params.omega,
    }
    consts = {}
    for key in ("theta", "y", "ghat", "gamma"):
        gap = observed[key][start:] - raw[key][start:]
        consts[key] = max(0.0, float(np.max(gap))) / basis[key]
    return replace(
        params,
        c_theta=consts["theta"],
        c_y=consts["y"],
        c_ghat=consts["ghat"],
        c_gamma=consts["gamma"],
    )


def check_envelope_dominance(
    scenario: Scenario,
    traj: Trajectory,
    params: EnvelopeParams,
    init: EnvelopeInit,
    rtol: float = 1e-9,
) -> dict:
    """Per-quantity dominance flags and worst margins over all samples."""
    observed = observed_envelope_series(scenario, traj)
    env = theorem2_envelopes(params, init, traj.t)
    out = {}
    for key in ("theta", "y", "ghat", "gamma"):
        slack = env[key] * (1.0 + rtol) - observed[key]
        out[key] = {
            "dominated": bool(np.all(slack >= 0.0)),
            "worst_slack": float(np.min(slack)),
        }
    return out


# ---------------------------------------------------------------------------
# Averaging gap


def averaging_gap(
    traj_full: Trajectory,
    traj_avg: AveragedTrajectory,
    theta_star: np.ndarray,
    h_inv: Optional[np.ndarray] = None,
) -> dict:
    """Sup-norm trajectory gaps between the full and averaged loops.

    Averaged samples are matched to full samples by the nearest earlier
    time; the parameter-estimate gap is the headline number, the gradient
    and filter gaps are reported alongside.
    """
    if traj_full.t.size == 0 or traj_avg.t.size == 0:
        raise ValueError("cannot compare empty trajectories")
    idx = np.searchsorted(traj_avg.t, traj_full.t + 1e-12, side="right") - 1
    valid = idx >= 0
    if not np.any(valid):
        raise ValueError("trajectories do not overlap in time")
    idx = idx[valid]
    theta_full = traj_full.theta_hat[valid]
    theta_avg = np.asarray(theta_star) + traj_avg.theta_tilde[idx]
    gaps = {
        "theta_hat": float(np.max(np.linalg.norm(theta_full - theta_avg, axis=1)))
    }
    ghat_gap = np.linalg.norm(traj_full.ghat[valid] - traj_avg.ghat[idx], axis=1)
    gaps["ghat"] = float(np.max(ghat_gap))
    if h_inv is not None:
        n = traj_full.theta.shape[1]
        gamma_full = traj_full.gamma[valid].reshape(-1, n, n)
        gamma_avg = traj_avg.gamma_tilde[idx].reshape(-1, n, n) + np.asarray(h_inv)
        gaps["gamma"] = float(
            np.max(np.linalg.norm(gamma_full - gamma_avg, axis=(1, 2)))
        )
    return gaps
