"""Static event-triggering: margin evaluation, held-value bookkeeping, and
the inter-event lower bound that rules out accumulation of events.

The mechanism is generic over the decision signal z: the Newton loop feeds
it the inverse-curvature/gradient product, the gradient baseline feeds it
the raw gradient estimate.  An event must fire whenever

    sigma * ||z(t)|| - alpha * ||z_held - z(t)||  <  0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TriggerConfig",
    "TriggerState",
    "EventLog",
    "trigger_margin",
    "fire",
    "zeno_lower_bound",
]


@dataclass(frozen=True)
class TriggerConfig:
    sigma: float
    alpha: float

    def __post_init__(self):
        if not (0.0 < self.sigma < 1.0):
            raise ValueError("sigma must lie in (0,1)")
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class TriggerState:
    """Decision signal frozen at the last event, and when that happened."""

    held_z: np.ndarray
    last_event_time: float

    def __post_init__(self):
        object.__setattr__(self, "held_z", np.array(self.held_z, dtype=float))


@dataclass
class EventLog:
    """Strictly increasing event instants, with inter-event statistics."""

    times: list[float] = field(default_factory=list)

    def append(self, t: float) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError(
                f"event instants must be strictly increasing: {t} after {self.times[-1]}"
            )
        if not self.times and t != 0.0:
            raise ValueError("the first logged event must be the initialization at t=0")
        self.times.append(float(t))

    @property
    def count(self) -> int:
        return len(self.times)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(np.asarray(self.times))

    @property
    def min_gap(self) -> float:
        g = self.gaps
        return float(np.min(g)) if g.size else math.nan

    @property
    def mean_gap(self) -> float:
        g = self.gaps
        return float(np.mean(g)) if g.size else math.nan


def trigger_margin(z_now: np.ndarray, state: TriggerState, cfg: TriggerConfig) -> float:
    """sigma*||z|| - alpha*||held - z||; an event must fire when negative."""
    z_now = np.asarray(z_now, dtype=float)
    if z_now.shape != state.held_z.shape:
        raise ValueError("decision signal dimension changed between events")
    err = state.held_z - z_now
    return cfg.sigma * float(np.linalg.norm(z_now)) - cfg.alpha * float(np.linalg.norm(err))


def fire(state: TriggerState, log: EventLog, z_now: np.ndarray, t: float) -> TriggerState:
    """Refresh the held signal at an event instant and log the instant."""
    if t <= state.last_event_time:
        raise ValueError(
            f"event time {t} is not after the previous event at {state.last_event_time}"
        )
    log.append(t)
    return TriggerState(held_z=np.asarray(z_now, dtype=float), last_event_time=float(t))


def zeno_lower_bound(
    k_norm: float,
    cfg: TriggerConfig,
    omega: float = math.inf,
    correction: float = 0.0,
) -> float:
    """Guaranteed lower bound on inter-event intervals for the average loop.

    With sbar = sigma/alpha the bound reads

        tau* = (1/||K||) * (1/sbar**2) * (1 - c/w) / (1 + 1/sbar - c/w),

    where the finite-frequency correction constant c defaults to zero (the
    idealized infinite-frequency value).
    """
    if not k_norm > 0.0:
        raise ValueError("the gain norm must be positive")
    sbar = cfg.sigma / cfg.alpha
    if sbar <= 0.0:
        raise ValueError("sigma/alpha must be positive")
    eps = correction / omega if math.isfinite(omega) else 0.0
    num = 1.0 - eps
    den = 1.0 + 1.0 / sbar - eps
    if den <= 0.0 or num <= 0.0:
        raise ValueError("finite-frequency correction too large for a positive bound")
    return num / (k_norm * sbar**2 * den)
