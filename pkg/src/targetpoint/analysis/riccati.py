"""Closed-form solution of ``P A + A^T P + P^2 / U^2 = -I`` for the 2x2 system.

Writing ``X = P/U + U A`` turns the equation into ``X^T X = S`` with
``S = -I + U^2 A^T A``.  Hence ``X = R(phi) sqrt(S)`` for a rotation
``R(phi)``, and symmetry of ``P`` fixes ``sin(phi)``:
``U (1 + k1) = -tr(sqrt(S)) sin(phi)``.  The branch ``cos(phi) >= 0`` is the
one with the asymptotic structure ``P ~ [[F1 k2, F2], [F2, F3/k2]]``.

The construction subtracts nearly equal quantities of size ``k2^2`` to
obtain entries of size ``1/k2``, so it runs in extended precision (mpmath)
and the residual of the rounded result is evaluated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .l2gain import ParameterError, l2_gain_upper

A_DEFAULT = 3.0 / 16.0


@dataclass(frozen=True)
class RiccatiSolution:
    ok: bool
    P: np.ndarray | None
    residual: float
    upsilon: float
    det_S: float
    sin_phi: float | None
    reason: str = ""

    @property
    def positive_definite(self) -> bool:
        return self.P is not None and self.P[0, 0] > 0 and float(np.linalg.det(self.P)) > 0


def _mat(rows) -> mpmath.matrix:
    return mpmath.matrix(rows)


def riccati_solve(k1: float, k2: float, upsilon: float | None = None,
                  dps: int = 60) -> RiccatiSolution:
    """Solve the Riccati equation at attenuation level ``upsilon``.

    ``upsilon`` defaults to :func:`l2_gain_upper`.  A
    failed construction (``S`` not positive definite, ``|sin phi| > 1``,
    ``P`` not positive definite) is reported through ``ok``/``reason``.
    """
    if not (k1 > 0 and k2 > 0):
        raise ParameterError(f"A is not Hurwitz for k1={k1}, k2={k2}")
    if upsilon is None:
        upsilon = l2_gain_upper(k1, k2)
    with mpmath.workdps(dps):
        K1, K2, U = mpmath.mpf(k1), mpmath.mpf(k2), mpmath.mpf(upsilon)
        A = _mat([[0, 1], [-K1, -K2]])
        S = -mpmath.eye(2) + U ** 2 * (A.T * A)
        det_s = mpmath.det(S)
        if not (S[0, 0] > 0 and det_s > 0):
            return RiccatiSolution(False, None, math.nan, upsilon, float(det_s), None,
                                   "S = -I + U^2 A^T A is not positive definite")
        r = mpmath.sqrt(det_s)
        sqrt_s = (S + r * mpmath.eye(2)) / mpmath.sqrt(S[0, 0] + S[1, 1] + 2 * r)
        sin_phi = -U * (1 + K1) / (sqrt_s[0, 0] + sqrt_s[1, 1])
        if abs(sin_phi) > 1:
            return RiccatiSolution(False, None, math.nan, upsilon, float(det_s), float(sin_phi),
                                   "|sin(phi)| > 1: no rotation makes P symmetric")
        cos_phi = mpmath.sqrt(1 - sin_phi ** 2)
        R = _mat([[cos_phi, -sin_phi], [sin_phi, cos_phi]])
        Pm = U * (R * sqrt_s - U * A)
        p12 = (Pm[0, 1] + Pm[1, 0]) / 2
        P = np.array([[float(Pm[0, 0]), float(p12)], [float(p12), float(Pm[1, 1])]])
    res = riccati_residual(P, k1, k2, upsilon)
    sol = RiccatiSolution(True, P, res, upsilon, float(det_s), float(sin_phi))
    if not sol.positive_definite:
        return RiccatiSolution(False, P, res, upsilon, float(det_s), float(sin_phi),
                               "P is not positive definite")
    return sol


def riccati_residual(P, k1: float, k2: float, upsilon: float) -> float:
    """Exact spectral norm of ``P A + A^T P + P^2/U^2 + I`` for float inputs.

    ``P`` must be symmetric.  Arithmetic is done in rationals so that the
    value measures ``P`` itself rather than rounding in the evaluation.
    """
    p = [[Fraction(float(P[i][j])) for j in range(2)] for i in range(2)]
    if p[0][1] != p[1][0]:
        raise ValueError("riccati_residual needs a symmetric P")
    a = [[Fraction(0), Fraction(1)], [Fraction(-float(k1)), Fraction(-float(k2))]]
    inv_u2 = 1 / Fraction(float(upsilon)) ** 2

    def mul(x, y):
        return [[x[i][0] * y[0][j] + x[i][1] * y[1][j] for j in range(2)] for i in range(2)]

    pa = mul(p, a)
    pp = mul(p, p)
    r = [[pa[i][j] + pa[j][i] + pp[i][j] * inv_u2 + (1 if i == j else 0) for j in range(2)]
         for i in range(2)]
    with mpmath.workdps(50):
        x, y, z = (mpmath.mpf(v.numerator) / v.denominator for v in (r[0][0], r[0][1], r[1][1]))
        half_tr = (x + z) / 2
        rad = mpmath.sqrt(((x - z) / 2) ** 2 + y * y)
        return float(max(abs(half_tr + rad), abs(half_tr - rad)))


def c0_constant(a: float = A_DEFAULT) -> float:
    """``sqrt(1 - 2a)/a``: governs ``1 + sin(phi) ~ C0^2/(2 k2^2)``."""
    return math.sqrt(1.0 - 2.0 * a) / a


@dataclass(frozen=True)
class AsymptoticsReport:
    k2: np.ndarray
    P: np.ndarray  # shape (n, 2, 2)
    slopes: tuple[float, float, float]
    F: np.ndarray  # shape (n, 3): P11/k2, P12, P22*k2
    det_F: np.ndarray  # F1 F3 - F2^2 per sample
    slope_tol: float

    @property
    def slopes_ok(self) -> bool:
        return all(abs(s - e) <= self.slope_tol for s, e in zip(self.slopes, (1.0, 0.0, -1.0)))

    @property
    def det_ok(self) -> bool:
        return bool(np.all(self.det_F > 0))

    @property
    def ok(self) -> bool:
        return self.slopes_ok and self.det_ok

    @property
    def F_limit(self) -> np.ndarray:
        """Fitted constants at the largest sampled ``k2``."""
        return self.F[-1]


def pk_asymptotics(k2_list: Sequence[float] | None = None, a: float = A_DEFAULT,
                   slope_tol: float = 0.05) -> AsymptoticsReport:
    """Log-log growth rates of the Riccati solution entries as ``k2`` grows.

    Expected slopes are ``(1, 0, -1)`` for ``(P11, P12, P22)``.
    """
    k2s = np.geomspace(1e2, 1e4, 9) if k2_list is None else np.asarray(k2_list, float)
    if np.any(k2s < 100) or np.any(np.diff(k2s) <= 0):
        raise ValueError("k2_list must be increasing with every k2 >= 100")
    Ps = []
    for k2 in k2s:
        sol = riccati_solve(a * k2 * k2, k2)
        if not sol.ok:
            raise RuntimeError(f"Riccati construction failed at k2={k2}: {sol.reason}")
        Ps.append(sol.P)
    Ps = np.array(Ps)
    lk = np.log(k2s)
    slopes = tuple(float(np.polyfit(lk, np.log(np.abs(Ps[:, i, j])), 1)[0])
                   for i, j in ((0, 0), (0, 1), (1, 1)))
    F = np.column_stack([Ps[:, 0, 0] / k2s, Ps[:, 0, 1], Ps[:, 1, 1] * k2s])
    det_F = F[:, 0] * F[:, 2] - F[:, 1] ** 2
    return AsymptoticsReport(k2s, Ps, slopes, F, det_F, slope_tol)
