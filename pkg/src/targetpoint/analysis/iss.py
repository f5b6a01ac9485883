"""Input-to-state bounds for ``(xi, eta)`` driven by bounded disturbances."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ..controller import Gains
from .l2gain import system_matrix


class HypothesisError(ValueError):
    """Preconditions of the refined bound are not met."""


def iss_bounds(g: Gains, kappa_max: float, mode: str = "asymptotic",
               y1_sup: float | None = None, y2_sup: float | None = None,
               t: float | None = None, z0=None) -> tuple[float, float]:
    """Bounds on ``(|xi|, |eta|)``.

    ``asymptotic``: ``8/k2 (kappa_max C1 + 4 C2/(3 k2))`` and
    ``2 kappa_max C1 + 32 C2/(3 k2)``.

    ``transient``: ``4/k2 (kappa_max C1 + 4 C2/(3 k2)) + |e^{At} z0|`` and
    ``kappa_max C1 + 16 C2/(3 k2) + |e^{At} z0|``; needs ``t`` and ``z0``.

    ``refined``: the asymptotic form with ``kappa_max C1`` replaced by
    ``C1 y1_sup`` and ``C2`` by ``C2 y2_sup``; needs ``y1_sup < kappa_max``
    and ``y2_sup < 1``.
    """
    k2, C1, C2 = g.k2, g.C1, g.C2
    if mode == "asymptotic":
        return (8.0 / k2) * (kappa_max * C1 + 4.0 * C2 / (3.0 * k2)), \
            2.0 * kappa_max * C1 + 32.0 * C2 / (3.0 * k2)
    if mode == "refined":
        if y1_sup is None or y2_sup is None:
            raise HypothesisError("refined bounds need y1_sup and y2_sup")
        if not (0 <= y1_sup < kappa_max and 0 <= y2_sup < 1.0):
            raise HypothesisError(
                f"refined bounds need y1_sup < kappa_max={kappa_max} and y2_sup < 1, "
                f"got {y1_sup}, {y2_sup}")
        return (8.0 / k2) * (C1 * y1_sup + 4.0 * C2 * y2_sup / (3.0 * k2)), \
            2.0 * C1 * y1_sup + 32.0 * C2 * y2_sup / (3.0 * k2)
    if mode == "transient":
        if t is None or z0 is None:
            raise HypothesisError("transient bounds need t and z0")
        free = float(np.linalg.norm(expm(system_matrix(g.k1, k2) * t) @ np.asarray(z0, float)))
        return (4.0 / k2) * (kappa_max * C1 + 4.0 * C2 / (3.0 * k2)) + free, \
            kappa_max * C1 + 16.0 * C2 / (3.0 * k2) + free
    raise ValueError(f"unknown ISS mode {mode!r}")


def zoh_matrices(k1: float, k2: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact discretisation ``Z+ = Ad Z + Bd U`` for inputs held over ``h``."""
    m = np.zeros((4, 4))
    m[:2, :2] = system_matrix(k1, k2)
    m[:2, 2:] = np.eye(2)
    e = expm(m * h)
    return e[:2, :2], e[:2, 2:]


@dataclass(frozen=True)
class MonteCarloResult:
    n_runs: int
    xi_sup: float
    eta_sup: float
    xi_bound: float
    eta_bound: float

    @property
    def ok(self) -> bool:
        return self.xi_sup <= self.xi_bound and self.eta_sup <= self.eta_bound


def iss_monte_carlo(g: Gains, kappa_max: float, n_runs: int = 100, seed: int = 0,
                    n_steps: int = 4000, hold_min: int = 1, hold_max: int = 200,
                    horizon_factor: float = 40.0) -> MonteCarloResult:
    """Drive the linear ``(xi, eta)`` system from rest with random held disturbances.

    ``nu1`` ranges over ``[-kappa_max C1, kappa_max C1]`` and ``nu2`` over
    ``[-C2, C2]``; each value is held for a random number of steps, and a
    fraction of segments uses the extreme values.  The horizon is
    ``horizon_factor`` slow time constants ``4/k2``.  Propagation is exact.
    """
    rng = np.random.default_rng(seed)
    h = horizon_factor * (4.0 / g.k2) / n_steps
    Ad, Bd = zoh_matrices(g.k1, g.k2, h)
    b1, b2 = kappa_max * g.C1, g.C2
    xi_sup = eta_sup = 0.0
    for _ in range(n_runs):
        z = np.zeros(2)
        n = 0
        while n < n_steps:
            hold = int(rng.integers(hold_min, hold_max + 1))
            if rng.random() < 0.5:
                u = np.array([b1 * rng.choice((-1.0, 1.0)), b2 * rng.choice((-1.0, 1.0))])
            else:
                u = np.array([rng.uniform(-b1, b1), rng.uniform(-b2, b2)])
            bu = Bd @ u
            for _ in range(min(hold, n_steps - n)):
                z = Ad @ z + bu
                xi_sup = max(xi_sup, abs(z[0]))
                eta_sup = max(eta_sup, abs(z[1]))
            n += hold
    xb, eb = iss_bounds(g, kappa_max, mode="asymptotic")
    return MonteCarloResult(n_runs, xi_sup, eta_sup, xb, eb)


def impulse_l1_gains(k1: float, k2: float) -> np.ndarray:
    """``[[|h_xi,nu1|_1, |h_xi,nu2|_1], [|h_eta,nu1|_1, |h_eta,nu2|_1]]``.

    L1 norms of the impulse-response entries of ``e^{At}`` by adaptive
    quadrature; ``sup|z_i| <= sum_j |h_ij|_1 sup|nu_j|`` from rest.
    """
    from scipy.integrate import quad

    A = system_matrix(k1, k2)
    lam = np.linalg.eigvals(A)
    t_end = 60.0 / min(abs(lam.real))
    out = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            out[i, j] = quad(lambda t: abs(expm(A * t)[i, j]), 0.0, t_end, limit=400)[0]
    return out


def char_poly(k1: float, k2: float, lam: float) -> float:
    """``det(lam I - A) = lam^2 + k2 lam + k1``."""
    return lam * lam + k2 * lam + k1


def eigenvalues(k1: float, k2: float) -> tuple[float, float]:
    """``(lambda_plus, lambda_minus)`` of ``A`` for real roots."""
    disc = k2 * k2 - 4.0 * k1
    if disc < 0:
        raise ValueError("complex eigenvalues")
    r = math.sqrt(disc)
    return -0.5 * k2 + 0.5 * r, -0.5 * k2 - 0.5 * r
