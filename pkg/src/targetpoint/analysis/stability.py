"""Curvature no-blow-up margin, outer-saturation deactivation and the bootstrap recursion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..controller import Gains, sat
from ..model import kappa_dot


class H1Error(ValueError):
    """The target offset violates ``d * kappa_max < 1``."""


@dataclass(frozen=True)
class BlowupMargin:
    margin: float
    ok: bool
    trap_level: float  # K: |kappa| >= K makes the bounding rate negative (inf if none)


def _trap_rate(kappa: float, d: float, kappa_max: float, eta_bar: float) -> float:
    dk = d * kappa
    return kappa * (d * eta_bar + d * kappa_max - 1.0 + 1.0 / (1.0 + dk * dk))


def blowup_margin(d: float, kappa_max: float, eta_bar: float, tol: float = 1e-13) -> BlowupMargin:
    """Margin ``1 - d kappa_max - d eta_bar`` and the trap level ``K``.

    ``K`` is located by bisection on
    ``kappa (d eta_bar + d kappa_max - 1 + 1/(1 + (d kappa)^2))``, which is
    negative for every ``kappa > K`` when the margin is positive.
    """
    if not d * kappa_max < 1.0:
        raise H1Error(f"d*kappa_max = {d * kappa_max:.6g} must be < 1")
    margin = 1.0 - d * kappa_max - d * eta_bar
    if margin <= 0:
        return BlowupMargin(margin, False, math.inf)
    lo, hi = 0.0, 1.0 / d
    while _trap_rate(hi, d, kappa_max, eta_bar) >= 0:
        lo, hi = hi, 2.0 * hi
    # rate > 0 on (0, K), < 0 beyond
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if _trap_rate(mid, d, kappa_max, eta_bar) >= 0:
            lo = mid
        else:
            hi = mid
    return BlowupMargin(margin, True, hi)


@dataclass(frozen=True)
class TrapRun:
    t: np.ndarray
    kappa: np.ndarray
    crossing_time: float  # first time |kappa| < K (inf if never)


def worst_case_kappa(d: float, kappa_max: float, eta_bar: float, vx: float = 5.0,
                     kappa0: float | None = None, t_end: float = 20.0,
                     dt: float = 1e-4) -> TrapRun:
    """Vehicle curvature under the worst admissible target curvature.

    ``omega = sign(kappa) (kappa_max + eta_bar)`` pushes ``|kappa|`` up as hard
    as the bounds allow.  Starts from ``kappa0`` (default ``2 K``) and
    integrates with RK4.
    """
    from ..sim import rk4_step

    bm = blowup_margin(d, kappa_max, eta_bar)
    if not bm.ok:
        raise ValueError("margin is not positive; no trap level exists")
    k0 = 2.0 * bm.trap_level if kappa0 is None else kappa0
    w = kappa_max + eta_bar

    def rhs(t, s):
        k = s[0]
        return np.array([kappa_dot(k, math.copysign(w, k), vx, d)])

    n = int(round(t_end / dt))
    ts = np.empty(n + 1)
    ks = np.empty(n + 1)
    state = np.array([k0])
    ts[0], ks[0] = 0.0, k0
    crossing = math.inf
    for i in range(n):
        state = rk4_step(state, i * dt, dt, rhs)
        ts[i + 1], ks[i + 1] = (i + 1) * dt, state[0]
        if crossing == math.inf and abs(state[0]) < bm.trap_level:
            crossing = (i + 1) * dt
    return TrapRun(ts, ks, crossing)


@dataclass(frozen=True)
class DeactivationResult:
    predicted: float
    empirical: float
    c_hat: float
    gains_scale: float  # 1/(k2 D)


def xy_rhs(X: float, Y: float, a: float, e1: float, e2: float) -> tuple[float, float]:
    """Rescaled saturated double integrator with perturbation terms ``e1, e2``."""
    return Y + e1, -sat(X + Y + e2) / a


def deactivation_bound(g: Gains, d1_inf: float, d2_inf: float, c_hat: float = 10.0,
                       t_end: float = 60.0, dt: float = 1e-2, x0: tuple[float, float] = (0.0, 0.0),
                       tail: float = 0.25) -> DeactivationResult:
    """Predicted and simulated ``limsup(|X| + |Y|)``.

    The prediction ``c_hat/(k2 D) (d1_inf + d2_inf)`` uses a heuristic
    constant.  The empirical value runs the rescaled system under each sign
    pattern of constant disturbances at their bounds and takes the largest
    ``|X| + |Y|`` over the final ``tail`` fraction of the horizon.
    """
    a = g.k1 / g.k2 ** 2
    predicted = c_hat * g.smallness * (d1_inf + d2_inf)
    n = int(round(t_end / dt))
    start = int(n * (1.0 - tail))
    worst = 0.0
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            e1 = g.k2 * g.C1 / g.D * s1 * d1_inf
            e2 = g.C2 / g.D * s2 * d2_inf
            X, Y = x0
            for i in range(n):
                k1x, k1y = xy_rhs(X, Y, a, e1, e2)
                k2x, k2y = xy_rhs(X + 0.5 * dt * k1x, Y + 0.5 * dt * k1y, a, e1, e2)
                k3x, k3y = xy_rhs(X + 0.5 * dt * k2x, Y + 0.5 * dt * k2y, a, e1, e2)
                k4x, k4y = xy_rhs(X + dt * k3x, Y + dt * k3y, a, e1, e2)
                X += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
                Y += dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
                if i >= start:
                    worst = max(worst, abs(X) + abs(Y))
    return DeactivationResult(predicted, worst, c_hat, g.smallness)


@dataclass(frozen=True)
class BootstrapResult:
    y1: np.ndarray
    y2: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    factor_bound: float  # C'/sqrt(k2)
    ratios: np.ndarray = field(repr=False)

    @property
    def pair_sum(self) -> np.ndarray:
        return self.y1 + self.y2

    @property
    def contractive(self) -> bool:
        return self.factor_bound < 1.0

    @property
    def ratios_bounded(self) -> bool:
        return bool(np.all(self.ratios <= self.factor_bound * (1 + 1e-12)))


def bootstrap_recursion(C: float, k2: float, y10: float, y20: float, n_steps: int) -> BootstrapResult:
    """Iterate the bound recursion with equalities.

    ``xi_n = C s_n / k2^3``, ``eta_n = C s_n / k2^2`` (``s_n = y1_n + y2_n``),
    ``y1_{n+1} = C xi_n``, ``y2_{n+1} = sqrt(C k2^2 xi_n y1_n)``.

    Since ``y1_n <= s_n``, ``s_{n+1} <= (C + C^2 / k2^2.5) / sqrt(k2) * s_n``;
    that factor is reported as ``factor_bound``.
    """
    if not (C > 0 and k2 > 0):
        raise ValueError("C and k2 must be positive")
    y1 = np.zeros(n_steps + 1)
    y2 = np.zeros(n_steps + 1)
    xi = np.zeros(n_steps + 1)
    eta = np.zeros(n_steps + 1)
    y1[0], y2[0] = y10, y20
    for n in range(n_steps + 1):
        s = y1[n] + y2[n]
        xi[n] = C * s / k2 ** 3
        eta[n] = C * s / k2 ** 2
        if n < n_steps:
            y1[n + 1] = C * xi[n]
            y2[n + 1] = math.sqrt(C * k2 ** 2 * xi[n] * y1[n])
    sums = y1 + y2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(sums[:-1] > 0, sums[1:] / sums[:-1], 0.0)
    c_prime = C + C * C / k2 ** 2.5
    return BootstrapResult(y1, y2, xi, eta, c_prime / math.sqrt(k2), ratios)
