"""Tuning laws and the zero-order hold on the control input.

Sign conventions: the gradient law is u = +K*Ghat with the product of the
map curvature and K required Hurwitz (a simulation-side check, since a real
deployment cannot know the curvature); the Newton law is u = -K*z with K
positive definite and z the inverse-curvature/gradient product.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ControlScheme",
    "ControllerGains",
    "ControlSample",
    "control_gradient_continuous",
    "control_newton",
    "held_control",
]


class ControlScheme(str, enum.Enum):
    GRADIENT_CONTINUOUS = "gradient_continuous"
    GRADIENT_ET = "gradient_et"
    NEWTON_CONTINUOUS = "newton_continuous"
    NEWTON_ET = "newton_et"

    @property
    def is_newton(self) -> bool:
        return self in (ControlScheme.NEWTON_CONTINUOUS, ControlScheme.NEWTON_ET)

    @property
    def is_event_triggered(self) -> bool:
        return self in (ControlScheme.GRADIENT_ET, ControlScheme.NEWTON_ET)


@dataclass(frozen=True)
class ControllerGains:
    """Diagonal adaptation gain and the scheme it drives."""

    k_diag: tuple[float, ...]
    scheme: ControlScheme

    def __post_init__(self):
        k = tuple(float(v) for v in self.k_diag)
        object.__setattr__(self, "k_diag", k)
        object.__setattr__(self, "scheme", ControlScheme(self.scheme))
        if len(k) == 0 or any(v == 0.0 for v in k):
            raise ValueError("the gain diagonal must be nonempty with nonzero entries")
        if self.scheme.is_newton and any(v <= 0.0 for v in k):
            raise ValueError("Newton schemes require a positive definite gain")

    @property
    def n(self) -> int:
        return len(self.k_diag)

    @property
    def K(self) -> np.ndarray:
        return np.diag(self.k_diag)

    @property
    def k_norm(self) -> float:
        """Induced 2-norm of the diagonal gain."""
        return float(np.max(np.abs(self.k_diag)))


@dataclass(frozen=True)
class ControlSample:
    """A control value and the instant it was computed; held constant after."""

    u: np.ndarray
    computed_at: float

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if not np.all(np.isfinite(u)):
            raise ValueError("control sample must be finite")
        object.__setattr__(self, "u", u)


def control_gradient_continuous(gains: ControllerGains, ghat: np.ndarray) -> np.ndarray:
    """Gradient-feedback law u = K*Ghat."""
    return np.asarray(gains.k_diag) * np.asarray(ghat, dtype=float)


def control_newton(gains: ControllerGains, z_held: np.ndarray) -> np.ndarray:
    """Newton law u = -K*z on the (held or instantaneous) decision signal."""
    return -np.asarray(gains.k_diag) * np.asarray(z_held, dtype=float)


def held_control(sample: ControlSample, t: float) -> np.ndarray:
    """Zero-order hold: the sample value, unchanged for any later query time."""
    if t < sample.computed_at:
        raise ValueError(f"query at t={t} precedes the sample at {sample.computed_at}")
    return sample.u
