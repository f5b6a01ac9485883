"""The quadratic Lyapunov candidate and its exact derivative along the error system.

Coordinates are ordered ``z = (xi, eta, y1, y2)``.  The candidate is::

    V = M Z^T P Z + k1 (y1^2 + y2^2)/2 + eta y2 + k2 y2 xi,   Z = (xi, eta)

and derivatives are taken in arclength time ``ds = v_d dt``, where the error
dynamics read::

    y1' = -C1 sat(y1) + (cos xi - 1) + mu y2
    y2' = sin xi - mu y1
    xi' = eta - kappa_r C1 sat(y1)
    eta' = -D sat((k1 xi + k2 eta + C2 sat(y2)) / D)

with ``mu = kappa_r (1 + C1 sat(y1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..controller import Gains, sat
from .iss import iss_bounds
from .linalg import jacobi_eigh
from .riccati import riccati_solve


def lyapunov_matrix(g: Gains, P) -> np.ndarray:
    """Symmetric ``Q`` with ``V(z) = z^T Q z``."""
    P = np.asarray(P, dtype=float)
    Q = np.zeros((4, 4))
    Q[:2, :2] = g.M * P
    Q[2, 2] = Q[3, 3] = 0.5 * g.k1
    Q[1, 3] = Q[3, 1] = 0.5
    Q[0, 3] = Q[3, 0] = 0.5 * g.k2
    return Q


def v_value(z: Sequence[float], g: Gains, P) -> float:
    """Evaluate ``V`` from its defining formula (no matrix assembly)."""
    xi, eta, y1, y2 = z
    vk = P[0][0] * xi * xi + 2.0 * P[0][1] * xi * eta + P[1][1] * eta * eta
    return g.M * vk + 0.5 * g.k1 * (y1 * y1 + y2 * y2) + eta * y2 + g.k2 * y2 * xi


def v_positive_definite(Q) -> tuple[float, bool]:
    w, _ = jacobi_eigh(Q)
    return float(w[0]), bool(w[0] > 0)


def sigma_rhs(z: Sequence[float], kappa_r: float, g: Gains) -> tuple[float, float, float, float]:
    """Error dynamics in arclength time, ordered ``(xi', eta', y1', y2')``."""
    xi, eta, y1, y2 = z
    s1 = sat(y1)
    m = kappa_r * (1.0 + g.C1 * s1)
    return (
        eta - kappa_r * g.C1 * s1,
        -g.D * sat((g.k1 * xi + g.k2 * eta + g.C2 * sat(y2)) / g.D),
        -g.C1 * s1 + (math.cos(xi) - 1.0) + m * y2,
        math.sin(xi) - m * y1,
    )


def v_gradient(z: Sequence[float], g: Gains, P) -> tuple[float, float, float, float]:
    xi, eta, y1, y2 = z
    pz0 = P[0][0] * xi + P[0][1] * eta
    pz1 = P[0][1] * xi + P[1][1] * eta
    return (
        2.0 * g.M * pz0 + g.k2 * y2,
        2.0 * g.M * pz1 + y2,
        g.k1 * y1,
        g.k1 * y2 + eta + g.k2 * xi,
    )


def vdot_exact(z: Sequence[float], kappa_r: float, g: Gains, P) -> float:
    """``dV/ds`` along the error dynamics, by the chain rule."""
    grad = v_gradient(z, g, P)
    f = sigma_rhs(z, kappa_r, g)
    return sum(a * b for a, b in zip(grad, f))


def decrease_target(z: Sequence[float], g: Gains) -> float:
    """Required upper bound ``-M/2 (xi^2+eta^2) - k1 C1/2 y1 sat(y1) - C2/2 y2 sat(y2)``."""
    xi, eta, y1, y2 = z
    return (-0.5 * g.M * (xi * xi + eta * eta) - 0.5 * g.k1 * g.C1 * y1 * sat(y1)
            - 0.5 * g.C2 * y2 * sat(y2))


def vdot_decrease_check(z: Sequence[float], kappa_r: float, g: Gains, P) -> tuple[float, float, bool]:
    """``(dV/ds, target bound, holds)`` at a single state."""
    vd = vdot_exact(z, kappa_r, g, P)
    rhs = decrease_target(z, g)
    return vd, rhs, vd <= rhs


def _vdot_grid(xi, eta, y1, y2, kappa_r, g: Gains, P) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`vdot_exact` and :func:`decrease_target` over broadcast arrays."""
    def vsat(x):
        return x / np.maximum(1.0, np.abs(x))

    s1, s2 = vsat(y1), vsat(y2)
    m = kappa_r * (1.0 + g.C1 * s1)
    f_xi = eta - kappa_r * g.C1 * s1
    f_eta = -g.D * vsat((g.k1 * xi + g.k2 * eta + g.C2 * s2) / g.D)
    f_y1 = -g.C1 * s1 + (np.cos(xi) - 1.0) + m * y2
    f_y2 = np.sin(xi) - m * y1
    g_xi = 2.0 * g.M * (P[0][0] * xi + P[0][1] * eta) + g.k2 * y2
    g_eta = 2.0 * g.M * (P[0][1] * xi + P[1][1] * eta) + y2
    vd = g_xi * f_xi + g_eta * f_eta + g.k1 * y1 * f_y1 + (g.k1 * y2 + eta + g.k2 * xi) * f_y2
    rhs = (-0.5 * g.M * (xi * xi + eta * eta) - 0.5 * g.k1 * g.C1 * y1 * s1
           - 0.5 * g.C2 * y2 * s2)
    return vd, rhs


@dataclass(frozen=True)
class ViolationScan:
    k2: float
    n_points: int
    n_violations: int
    y1_extent: float  # max |y1| over violating points (0 if none)
    y2_extent: float
    y1_span: float  # largest |y1| on the grid
    y2_span: float
    xi_bound: float
    eta_bound: float

    @property
    def contained(self) -> bool:
        """Violations stay strictly inside the scanned window."""
        return self.y1_extent < self.y1_span and self.y2_extent < self.y2_span

    @property
    def box_constants(self) -> tuple[float, float]:
        """``(C_y1, C_y2)`` with extents ``C_y1/k2^2`` and ``C_y2/k2^1.5``."""
        return self.y1_extent * self.k2 ** 2, self.y2_extent * self.k2 ** 1.5


def _signed_logspace(lo: float, hi: float, n: int) -> np.ndarray:
    half = np.geomspace(lo, hi, n // 2)
    return np.concatenate([-half[::-1], [0.0] if n % 2 else [], half])


def violation_scan(g: Gains, P, kappa_max: float, n_xi: int = 9, n_eta: int = 9,
                   n_y: int = 35, y_lo: float = 1e-12, y_hi: float = 1.0,
                   kappa_values: Sequence[float] | None = None) -> ViolationScan:
    """Grid search for states where the decrease inequality fails.

    ``(xi, eta)`` range over the asymptotic ISS box of the gains (where the
    trajectories end up after a transient) and ``(y1, y2)`` over signed
    log-spaced grids.  Each curvature in ``kappa_values`` (default
    ``-kappa_max, 0, kappa_max``) is scanned.
    """
    xi_b, eta_b = iss_bounds(g, kappa_max, mode="asymptotic")
    xi = np.linspace(-xi_b, xi_b, n_xi)
    eta = np.linspace(-eta_b, eta_b, n_eta)
    ys = _signed_logspace(y_lo, y_hi, n_y)
    XI, ETA, Y1, Y2 = np.meshgrid(xi, eta, ys, ys, indexing="ij")
    kappas = (-kappa_max, 0.0, kappa_max) if kappa_values is None else tuple(kappa_values)
    bad = np.zeros(XI.shape, dtype=bool)
    for kr in kappas:
        vd, rhs = _vdot_grid(XI, ETA, Y1, Y2, kr, g, P)
        bad |= vd > rhs
    n_bad = int(bad.sum())
    y1_ext = float(np.max(np.abs(Y1[bad]))) if n_bad else 0.0
    y2_ext = float(np.max(np.abs(Y2[bad]))) if n_bad else 0.0
    return ViolationScan(g.k2, XI.size * len(kappas), n_bad, y1_ext, y2_ext,
                         float(ys.max()), float(ys.max()), xi_b, eta_b)


@dataclass(frozen=True)
class ScalingFit:
    k2: np.ndarray
    y1_extent: np.ndarray
    y2_extent: np.ndarray
    slope_y1: float
    slope_y2: float
    rel_tol: float

    @property
    def ok(self) -> bool:
        return (abs(self.slope_y1 + 2.0) <= 2.0 * self.rel_tol
                and abs(self.slope_y2 + 1.5) <= 1.5 * self.rel_tol)


def violation_scaling(k2_list: Sequence[float] = (100, 200, 400), beta: float = 8.1,
                      D: float = 50.0, kappa_max: float = 0.01, rel_tol: float = 0.2,
                      **scan_kw) -> ScalingFit:
    """Fit how the violation box shrinks with ``k2`` (theorem gains)."""
    from ..controller import synthesize_gains

    ext1, ext2 = [], []
    for k2 in k2_list:
        g = synthesize_gains(k2, beta, D)
        sol = riccati_solve(g.k1, g.k2)
        scan = violation_scan(g, sol.P, kappa_max, **scan_kw)
        if scan.n_violations == 0:
            raise RuntimeError(f"no decrease violations on the grid at k2={k2}; there is no box to fit")
        ext1.append(scan.y1_extent)
        ext2.append(scan.y2_extent)
    lk = np.log(np.asarray(k2_list, float))
    s1 = float(np.polyfit(lk, np.log(ext1), 1)[0])
    s2 = float(np.polyfit(lk, np.log(ext2), 1)[0])
    return ScalingFit(np.asarray(k2_list, float), np.array(ext1), np.array(ext2), s1, s2, rel_tol)


@dataclass(frozen=True)
class Sandwich:
    lower: float  # a: V >= a * (k2 xi^2 + eta^2/k2 + k2^2 |y|^2)
    upper: float
    n_samples: int
    verified: bool


def sandwich_constants(Q, k2: float, n_samples: int = 20_000, seed: int = 0) -> Sandwich:
    """Constants bracketing ``V`` between weighted sums of squares.

    With ``W = diag(k2, 1/k2, k2^2, k2^2)`` the sharp constants are the
    extreme eigenvalues of ``W^-1/2 Q W^-1/2``; they are checked on random
    points of the unit sphere.
    """
    Q = np.asarray(Q, dtype=float)
    w = np.array([k2, 1.0 / k2, k2 * k2, k2 * k2])
    s = 1.0 / np.sqrt(w)
    qt = Q * np.outer(s, s)
    ev, _ = jacobi_eigh((qt + qt.T) / 2)
    lo, hi = float(ev[0]), float(ev[-1])
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_samples, 4))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    v = np.einsum("ni,ij,nj->n", z, Q, z)
    weight = z * z @ w
    tol = 1e-9
    verified = bool(np.all(v >= lo * weight * (1 - tol)) and np.all(v <= hi * weight * (1 + tol)))
    return Sandwich(lo, hi, n_samples, verified and lo > 0)
