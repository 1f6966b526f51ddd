"""Gradient and curvature estimation from the scalar measurement.

The instantaneous estimates are demodulation products; only their averages
over the common dither period carry derivative information.  The Riccati
filter turns the curvature estimate into an inverse-curvature estimate
without ever inverting a matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["RiccatiState", "gradient_estimate", "hessian_estimate", "riccati_rhs"]


def gradient_estimate(m_t: np.ndarray, y: float) -> np.ndarray:
    """Instantaneous gradient estimate: demodulation vector times measurement."""
    return np.asarray(m_t, dtype=float) * float(y)


def hessian_estimate(n_t: np.ndarray, y: float) -> np.ndarray:
    """Instantaneous curvature estimate: probe matrix times measurement.

    Symmetric whenever the probe matrix is, which holds by construction.
    """
    return np.asarray(n_t, dtype=float) * float(y)


@dataclass(frozen=True)
class RiccatiState:
    """Inverse-curvature estimate and the filter frequency driving it."""

    gamma: np.ndarray
    omega_r: float

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError(f"gamma must be square, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("gamma must have finite entries")
        if not (self.omega_r > 0.0 and math.isfinite(self.omega_r)):
            raise ValueError("the filter frequency omega_r must be positive")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "omega_r", float(self.omega_r))


def riccati_rhs(state: RiccatiState, h_hat: np.ndarray) -> np.ndarray:
    """Filter derivative: w_r * Gamma - w_r * Gamma @ Hhat @ Gamma.

    Equilibria are the zero matrix (repelling for w_r > 0) and the inverse
    of ``h_hat`` when the estimate is constant (attracting).
    """
    g = state.gamma
    return state.omega_r * (g - g @ np.asarray(h_hat, dtype=float) @ g)
