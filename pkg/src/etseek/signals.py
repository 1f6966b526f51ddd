"""Probing, demodulation, and curvature-probe signals.

Per-channel sinusoids share a base frequency scaled by exact rational
multipliers.  The multipliers stay rational end to end: the resonance
exclusion checks and the common period are computed in exact arithmetic,
and floating-point frequencies appear only when a signal is evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "DitherDesign",
    "Violation",
    "ValidationReport",
    "check_probing_frequencies",
    "common_period",
    "dither",
    "demod",
    "hessian_probe",
    "CLAUSE_DUPLICATE",
    "CLAUSE_NONPOSITIVE",
    "CLAUSE_HALF_SUM",
    "CLAUSE_SUM_DOUBLE",
    "CLAUSE_SUM",
    "CLAUSE_DIFF",
]

# Exclusion clauses for the probing-frequency multipliers.  Indices reported
# in violations are 1-based, matching channel subscripts in scenario files.
CLAUSE_DUPLICATE = "w'_i = w'_j (duplicate multiplier)"
CLAUSE_NONPOSITIVE = "w'_i <= 0"
CLAUSE_HALF_SUM = "w'_i = (w'_j + w'_k)/2"
CLAUSE_SUM_DOUBLE = "w'_i = w'_j + 2*w'_k"
CLAUSE_SUM = "w'_i = w'_k + w'_l"
CLAUSE_DIFF = "w'_i = w'_k - w'_l"


@dataclass(frozen=True)
class Violation:
    clause: str
    indices: tuple[int, ...]
    value: Fraction

    def __str__(self) -> str:
        idx = ", ".join(str(i) for i in self.indices)
        return f"{self.clause} hit at channels ({idx}): value {self.value}"


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...] = ()

    def __bool__(self) -> bool:
        return self.ok

    def summary(self) -> str:
        if self.ok:
            return "probing frequencies admissible"
        return "; ".join(str(v) for v in self.violations)


def _as_fractions(multipliers: Iterable) -> tuple[Fraction, ...]:
    return tuple(Fraction(m) for m in multipliers)


def check_probing_frequencies(multipliers: Sequence) -> ValidationReport:
    """Exact-arithmetic admissibility check of the frequency multipliers.

    Enumerates every index tuple of the exclusion set, skipping only the
    combinations that degenerate to an identity by construction (equality
    with itself, the half-sum with j = k = i, and the difference with
    k = l).  Duplicate or non-positive multipliers short-circuit the clause
    enumeration and are reported as violations of their own.
    """
    w = _as_fractions(multipliers)
    n = len(w)
    if n == 0:
        raise ValueError("at least one frequency multiplier is required")

    violations: list[Violation] = []
    for i, wi in enumerate(w):
        if wi <= 0:
            violations.append(Violation(CLAUSE_NONPOSITIVE, (i + 1,), wi))
    for i in range(n):
        for j in range(i + 1, n):
            if w[i] == w[j]:
                violations.append(Violation(CLAUSE_DUPLICATE, (j + 1, i + 1), w[j]))
    if violations:
        return ValidationReport(False, tuple(violations))

    for i in range(n):
        for j in range(n):
            for k in range(n):
                if not (j == i and k == i) and w[i] == (w[j] + w[k]) / 2:
                    violations.append(
                        Violation(CLAUSE_HALF_SUM, (i + 1, j + 1, k + 1), w[i])
                    )
                if w[i] == w[j] + 2 * w[k]:
                    violations.append(
                        Violation(CLAUSE_SUM_DOUBLE, (i + 1, j + 1, k + 1), w[i])
                    )
    for i in range(n):
        for k in range(n):
            for l in range(n):
                if w[i] == w[k] + w[l]:
                    violations.append(Violation(CLAUSE_SUM, (i + 1, k + 1, l + 1), w[i]))
                if k != l and w[i] == w[k] - w[l]:
                    violations.append(Violation(CLAUSE_DIFF, (i + 1, k + 1, l + 1), w[i]))
    return ValidationReport(not violations, tuple(violations))


def _rational_lcm(values: Sequence[Fraction]) -> Fraction:
    """Least common multiple of positive rationals: lcm(p)/gcd(q)."""
    num = 1
    den = 0
    for v in values:
        num = math.lcm(num, v.numerator)
        den = math.gcd(den, v.denominator)
    return Fraction(num, den)


@dataclass(frozen=True)
class DitherDesign:
    """Amplitudes, exact rational frequency multipliers, and base frequency.

    ``T`` (the common period of every signal generated here) and the
    root-sum-square amplitude ``a`` are derived at construction.
    """

    amplitudes: tuple[float, ...]
    multipliers: tuple[Fraction, ...]
    base_omega: float = 1.0

    _amps: np.ndarray = field(init=False, repr=False, compare=False)
    _omegas: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        amps = tuple(float(a) for a in self.amplitudes)
        mults = _as_fractions(self.multipliers)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "multipliers", mults)
        if len(amps) == 0 or len(amps) != len(mults):
            raise ValueError("amplitudes and multipliers must be nonempty and equal length")
        if any(a == 0.0 or not math.isfinite(a) for a in amps):
            raise ValueError("all dither amplitudes must be nonzero and finite")
        if any(m <= 0 for m in mults):
            raise ValueError("all frequency multipliers must be positive")
        if len(set(mults)) != len(mults):
            raise ValueError("frequency multipliers must be pairwise distinct")
        if not (self.base_omega > 0.0 and math.isfinite(self.base_omega)):
            raise ValueError("base frequency must be positive and finite")
        object.__setattr__(self, "_amps", np.array(amps))
        object.__setattr__(
            self, "_omegas", np.array([float(m) for m in mults]) * self.base_omega
        )

    @property
    def n(self) -> int:
        return len(self.amplitudes)

    @property
    def omega_values(self) -> np.ndarray:
        """Per-channel probing frequencies, in rad/s (floating point)."""
        return self._omegas

    @property
    def rss_amplitude(self) -> float:
        """Root-sum-square of the per-channel amplitudes."""
        return float(np.sqrt(np.sum(self._amps**2)))

    @property
    def period_multiple(self) -> Fraction:
        """Exact rational L with T = 2*pi*L/base_omega: L = LCM{1/w'_i}."""
        return _rational_lcm([Fraction(1) / m for m in self.multipliers])

    def validate_frequencies(self) -> ValidationReport:
        return check_probing_frequencies(self.multipliers)


def common_period(design: DitherDesign) -> float:
    """Common period T of all probing signals, from the exact rational LCM."""
    return 2.0 * math.pi * float(design.period_multiple) / design.base_omega


def dither(design: DitherDesign, t: float) -> np.ndarray:
    """Additive probing vector: a_i * sin(w_i t)."""
    return design._amps * np.sin(design._omegas * t)


def demod(design: DitherDesign, t: float) -> np.ndarray:
    """Demodulation vector: (2/a_i) * sin(w_i t)."""
    return (2.0 / design._amps) * np.sin(design._omegas * t)


def hessian_probe(design: DitherDesign, t: float) -> np.ndarray:
    """Curvature-probe matrix of second-harmonic and cross-frequency cosines.

    Diagonal entries are -(8/a_i^2) cos(2 w_i t); off-diagonal entries are
    (2/(a_i a_j)) [cos((w_i - w_j) t) - cos((w_i + w_j) t)], symmetric by
    construction.
    """
    a = design._amps
    w = design._omegas
    wi = w[:, None]
    wj = w[None, :]
    probe = (2.0 / (a[:, None] * a[None, :])) * (
        np.cos((wi - wj) * t) - np.cos((wi + wj) * t)
    )
    np.fill_diagonal(probe, -(8.0 / a**2) * np.cos(2.0 * w * t))
    return probe
