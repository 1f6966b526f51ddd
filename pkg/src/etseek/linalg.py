"""Small dense linear-algebra kernels.

Eigenvalue routines are implemented here rather than pulled from a LAPACK
wrapper: a cyclic Jacobi sweep for symmetric matrices, and a characteristic
polynomial (Faddeev-LeVerrier) plus Durand-Kerner root finder for the small
non-symmetric matrices that show up in Hurwitz checks.  Everything in this
package works with n of order 10 or less, where these methods are accurate
and fast.  numpy supplies array storage and dense linear solves only.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "symmetric_eigh",
    "symmetric_eigvals",
    "symmetric_inverse",
    "eigenvalues",
    "is_hurwitz",
    "spectral_norm",
    "is_symmetric",
]


def is_symmetric(a: np.ndarray, tol: float = 1e-12) -> bool:
    """True if ``a`` equals its transpose up to ``tol`` (scaled by max entry)."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(a))))
    return float(np.max(np.abs(a - a.T))) <= tol * scale


def symmetric_eigh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 60):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ``w`` in ascending order and
    orthonormal columns ``v`` such that ``a @ v[:, k] == w[k] * v[:, k]``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not is_symmetric(a, tol=1e-9):
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    if n == 1:
        return a[0, :1].copy(), v

    scale = max(1.0, float(np.max(np.abs(a))))
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 0.25 * tol * scale / n:
                    continue
                # classical 2x2 symmetric Schur rotation
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rp = a[:, p].copy()
                rq = a[:, q].copy()
                a[:, p] = c * rp - s * rq
                a[:, q] = s * rp + c * rq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def symmetric_eigvals(a: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix (Jacobi method)."""
    w, _ = symmetric_eigh(a)
    return w


def symmetric_inverse(a: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric sign-definite matrix via its eigenbasis."""
    w, v = symmetric_eigh(a)
    if np.any(w == 0.0):
        raise ValueError("matrix is singular")
    return (v / w) @ v.T


def _char_poly(a: np.ndarray) -> np.ndarray:
    """Monic characteristic polynomial coefficients via Faddeev-LeVerrier.

    Returns ``c`` with ``p(x) = x**n + c[0]*x**(n-1) + ... + c[n-1]``.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    coeffs = np.zeros(n)
    m = np.eye(n)
    for k in range(1, n + 1):
        m = a @ m
        c = -np.trace(m) / k
        coeffs[k - 1] = c
        m = m + c * np.eye(n)
    return coeffs


def _poly_roots(coeffs: np.ndarray, tol: float = 1e-13, max_iter: int = 400) -> np.ndarray:
    """All complex roots of a monic polynomial by Durand-Kerner iteration."""
    n = len(coeffs)
    if n == 0:
        return np.array([], dtype=complex)
    if n == 1:
        return np.array([-coeffs[0]], dtype=complex)
    if n == 2:
        b, c = coeffs
        disc = complex(b * b - 4.0 * c)
        sq = np.sqrt(disc)
        return np.array([(-b + sq) / 2.0, (-b - sq) / 2.0])

    def p(z: complex) -> complex:
        acc = 1.0 + 0.0j
        for c in coeffs:
            acc = acc * z + c
        return acc

    radius = 1.0 + float(np.max(np.abs(coeffs)))
    seed = 0.4 + 0.9j  # standard non-real, non-unit-modulus seed
    z = radius * seed ** np.arange(1, n + 1)
    for _ in range(max_iter):
        delta = 0.0
        for i in range(n):
            denom = 1.0 + 0.0j
            for j in range(n):
                if j != i:
                    denom *= z[i] - z[j]
            if denom == 0:
                denom = 1e-30
            step = p(z[i]) / denom
            z[i] -= step
            delta = max(delta, abs(step))
        if delta <= tol * radius:
            break
    return z


def eigenvalues(a: np.ndarray) -> np.ndarray:
    """Complex eigenvalues of a small square matrix.

    Symmetric input is routed through the Jacobi solver; otherwise the
    characteristic polynomial is built and its roots are found iteratively.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if n == 1:
        return a[0, :1].astype(complex)
    if is_symmetric(a, tol=1e-10):
        return symmetric_eigvals(a).astype(complex)
    if n == 2:
        tr = a[0, 0] + a[1, 1]
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        disc = complex(tr * tr - 4.0 * det)
        sq = np.sqrt(disc)
        return np.array([(tr + sq) / 2.0, (tr - sq) / 2.0])
    return _poly_roots(_char_poly(a))


def is_hurwitz(a: np.ndarray, margin: float = 0.0) -> bool:
    """True if every eigenvalue of ``a`` has real part below ``-margin``."""
    return bool(np.max(eigenvalues(a).real) < -margin)


def spectral_norm(a: np.ndarray) -> float:
    """Induced 2-norm: square root of the top eigenvalue of ``a.T @ a``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    w = symmetric_eigvals(a.T @ a)
    return float(np.sqrt(max(w[-1], 0.0)))
