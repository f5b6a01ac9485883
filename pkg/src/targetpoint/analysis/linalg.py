"""Small fixed-size linear algebra: 2x2 closed forms and a cyclic Jacobi solver."""

from __future__ import annotations

import math

import numpy as np


def jacobi_eigh(a, tol: float = 1e-15, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns ascending eigenvalues and the matching eigenvectors as columns.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or not np.array_equal(a, a.T):
        raise ValueError("jacobi_eigh needs a square symmetric matrix")
    v = np.eye(n)
    scale = max(float(np.max(np.abs(a))), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                a[p, q] = a[q, p] = 0.0
                v = v @ rot
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    w = np.diag(a).copy()
    order = np.argsort(w)
    return w[order], v[:, order]


def sym2_eigvals(m) -> tuple[float, float]:
    """Eigenvalues ``(lo, hi)`` of a symmetric 2x2 matrix, cancellation-free."""
    a, b, c = float(m[0][0]), float(m[0][1]), float(m[1][1])
    half_tr = 0.5 * (a + c)
    r = math.hypot(0.5 * (a - c), b)
    hi = half_tr + r if half_tr >= 0 else half_tr - r
    other = (a * c - b * b) / hi if hi != 0 else 0.0
    return (other, hi) if other <= hi else (hi, other)


def sqrtm_spd2(s) -> np.ndarray:
    """Principal square root of a symmetric positive definite 2x2 matrix."""
    s = np.asarray(s, dtype=float)
    r = math.sqrt(np.linalg.det(s))
    return (s + r * np.eye(2)) / math.sqrt(np.trace(s) + 2.0 * r)
