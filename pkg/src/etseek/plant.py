"""The unknown static map optimized by the seeking loops.

Only the simulator and the test oracles hold a map instance; controllers
see nothing but the scalar measurement it produces.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .linalg import symmetric_eigvals

__all__ = ["ExtremumKind", "QuadraticMap", "StaticMap"]


class ExtremumKind(enum.Enum):
    """Whether the extremum is a minimum or a maximum of the map."""

    MINIMUM = 0
    MAXIMUM = 1

    @property
    def op(self) -> int:
        """Sign-selection flag: (-1)**op times the curvature is positive."""
        return self.value


class StaticMap:
    """Interface for static maps: a scalar measurement of a vector input.

    Only the quadratic map below ships with correctness guarantees; this
    hook exists so non-quadratic plants can be dropped into the simulator.
    """

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def evaluate(self, theta: np.ndarray) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class QuadraticMap(StaticMap):
    """y = q_star + 0.5 (theta - theta_star)' H (theta - theta_star).

    The curvature matrix must be symmetric and sign-definite; indefinite
    matrices are rejected at construction.
    """

    q_star: float
    h_star: np.ndarray
    theta_star: np.ndarray

    _eigs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        h = np.array(self.h_star, dtype=float)
        ts = np.array(self.theta_star, dtype=float).ravel()
        n = ts.size
        if h.shape != (n, n):
            raise ValueError(f"curvature shape {h.shape} does not match dimension {n}")
        scale = max(1.0, float(np.max(np.abs(h))))
        if float(np.max(np.abs(h - h.T))) > 1e-12 * scale:
            raise ValueError("curvature matrix must be symmetric to 1e-12")
        h = 0.5 * (h + h.T)
        eigs = symmetric_eigvals(h)
        if not (np.all(eigs > 0.0) or np.all(eigs < 0.0)):
            raise ValueError(f"curvature matrix is indefinite: eigenvalues {eigs}")
        object.__setattr__(self, "h_star", h)
        object.__setattr__(self, "theta_star", ts)
        object.__setattr__(self, "q_star", float(self.q_star))
        object.__setattr__(self, "_eigs", eigs)

    @property
    def dim(self) -> int:
        return self.theta_star.size

    @property
    def curvature_eigenvalues(self) -> np.ndarray:
        return self._eigs

    def evaluate(self, theta: np.ndarray) -> float:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != self.theta_star.shape:
            raise ValueError(
                f"input shape {theta.shape} does not match map dimension {self.dim}"
            )
        d = theta - self.theta_star
        return self.q_star + 0.5 * float(d @ self.h_star @ d)

    def true_gradient(self, theta: np.ndarray) -> np.ndarray:
        """Gradient of the map at ``theta``; test oracle, unknown to controllers."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != self.theta_star.shape:
            raise ValueError(
                f"input shape {theta.shape} does not match map dimension {self.dim}"
            )
        return self.h_star @ (theta - self.theta_star)

    def extremum_kind(self) -> ExtremumKind:
        return ExtremumKind.MINIMUM if self._eigs[0] > 0.0 else ExtremumKind.MAXIMUM
