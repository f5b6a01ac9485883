"""L2-gain of the disturbed double integrator ``Z' = A Z + U``.

``A = [[0, 1], [-k1, -k2]]`` and ``B = I``.  The gain is
``sup_w sigma_max((jw I - A)^-1) = 1 / min_w sigma_min(jw I - A)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ParameterError(ValueError):
    """Gains for which ``A`` is not Hurwitz."""


def system_matrix(k1: float, k2: float) -> np.ndarray:
    return np.array([[0.0, 1.0], [-k1, -k2]])


def _check_hurwitz(k1: float, k2: float) -> None:
    if not (k1 > 0 and k2 > 0):
        raise ParameterError(f"A is not Hurwitz for k1={k1}, k2={k2}")


def lambda_min_at(k1: float, k2: float, omega: float) -> float:
    """Smallest eigenvalue of ``(jwI - A)^* (jwI - A)`` at frequency ``omega``."""
    w2 = omega * omega
    tr = 1.0 + k1 * k1 + k2 * k2 + 2.0 * w2
    det = w2 * k2 * k2 + (w2 - k1) ** 2
    return 2.0 * det / (tr + math.sqrt(tr * tr - 4.0 * det))


def lambda_min_closed_form(k1: float, k2: float) -> float:
    """Minimum over frequency of :func:`lambda_min_at` (attained at ``w = 0``)."""
    _check_hurwitz(k1, k2)
    return lambda_min_at(k1, k2, 0.0)


def l2_gain_closed_form(k1: float, k2: float) -> float:
    """Exact L2-gain ``1/sqrt(lambda_min)``."""
    return 1.0 / math.sqrt(lambda_min_closed_form(k1, k2))


def l2_gain_upper(k1: float, k2: float) -> float:
    """Conservative closed-form L2-gain level.

    It over-estimates the exact gain (see :func:`l2_gain_closed_form`) but is
    still a valid attenuation level, which is why it is the level used for
    the Riccati construction.
    """
    _check_hurwitz(k1, k2)
    r = (1.0 + k2 * k2) / (k1 * k1)
    return math.sqrt(0.5 + 0.5 * r + 0.5 * math.sqrt(1.0 + (2.0 * k2 / k1) ** 2 + (2.0 * r) ** 2))


def _sigma_min(k1: float, k2: float, omega) -> np.ndarray:
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    m = np.zeros((omega.size, 2, 2), dtype=complex)
    m[:, 0, 0] = 1j * omega
    m[:, 0, 1] = -1.0
    m[:, 1, 0] = k1
    m[:, 1, 1] = 1j * omega + k2
    return np.linalg.svd(m, compute_uv=False)[:, -1]


@dataclass(frozen=True)
class SweepResult:
    upsilon: float
    lambda_min: float
    omega_star: float


def l2_gain_sweep(k1: float, k2: float, omega_grid=None, n_grid: int = 4001,
                  golden_tol: float = 1e-10) -> SweepResult:
    """Frequency-sweep estimate of the L2-gain.

    A coarse grid over ``[0, 10 k2]`` locates the minimum of ``sigma_min``,
    which is then refined by golden-section search on the neighbouring grid
    cells.  Singular values come from an SVD of ``jwI - A``.
    """
    _check_hurwitz(k1, k2)
    grid = np.linspace(0.0, 10.0 * k2, n_grid) if omega_grid is None else np.sort(np.asarray(omega_grid, float))
    sig = _sigma_min(k1, k2, grid)
    i = int(np.argmin(sig))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]

    def f(w: float) -> float:
        return float(_sigma_min(k1, k2, w)[0])

    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > golden_tol * max(1.0, hi):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = f(d)
    cands = [(sig[i], grid[i]), (fc, c), (fd, d)]
    s_min, w_star = min(cands)
    return SweepResult(1.0 / s_min, s_min * s_min, float(w_star))


def upsilon_sq_expansion(k2: float, a: float = 3.0 / 16.0) -> float:
    """Leading asymptotic term of ``l2_gain_upper(k1, k2)**2 - 1``: ``3/(2 a^2 k2^2)``."""
    return 3.0 / (2.0 * a * a * k2 * k2)
