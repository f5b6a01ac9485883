"""Tracking errors, gain synthesis and the saturated feedback laws."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from .model import ReferenceState, TargetState, kappa_dot

A_DEFAULT = 3.0 / 16.0
K2_MIN = 20.0
BETA_MIN = 8.0
SMALLNESS = 0.01  # threshold on 1/(k2 D)


class GainError(ValueError):
    """Gain parameters outside their admissible range."""


@dataclass(frozen=True)
class ErrorState:
    e_p: float
    e_q: float
    xi: float
    eta: float
    y1: float
    y2: float


@dataclass(frozen=True)
class Gains:
    """Controller constants.

    In ``theorem`` mode the constants are tied together by ``k1 = a k2^2``,
    ``C2 = 1/(2 beta k2)``, ``C1 = a C2/(4 k2)`` and ``M = beta k2``.
    ``manual`` mode takes them as given, with no relation enforced.
    """

    k1: float
    k2: float
    C1: float
    C2: float
    D: float
    M: float
    beta: float | None = None
    a: float = A_DEFAULT
    mode: str = "manual"

    def __post_init__(self) -> None:
        for name in ("k1", "k2", "C1", "C2", "D", "M"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise GainError(f"gain {name} must be positive and finite, got {v}")
        if self.C1 >= 1:
            raise GainError(f"C1 must be < 1 so that the reference speed stays positive, got {self.C1}")
        if self.mode not in ("theorem", "manual"):
            raise GainError(f"unknown gain mode {self.mode!r}")

    @property
    def smallness(self) -> float:
        """``1/(k2 D)``, required to be small."""
        return 1.0 / (self.k2 * self.D)

    @property
    def smallness_ok(self) -> bool:
        return self.smallness <= SMALLNESS

    def relation_errors(self) -> dict[str, float]:
        """Relative defects of the theorem relations (zero in theorem mode)."""
        a = A_DEFAULT
        beta = self.beta if self.beta is not None else self.M / self.k2
        return {
            "k1 = a k2^2": self.k1 / (a * self.k2 ** 2) - 1.0,
            "C2 = 1/(2 beta k2)": 2.0 * beta * self.k2 * self.C2 - 1.0,
            "C1 = a C2/(4 k2)": 4.0 * self.k2 * self.C1 / (a * self.C2) - 1.0,
            "M = beta k2": self.M / (beta * self.k2) - 1.0,
        }

    def with_k2(self, k2: float) -> "Gains":
        if self.mode == "theorem":
            return synthesize_gains(k2, self.beta, self.D)
        return replace(self, k2=k2)

    def with_D(self, D: float) -> "Gains":
        return replace(self, D=D)


def synthesize_gains(k2: float, beta: float, D: float) -> Gains:
    """Theorem-mode gains from ``k2 >= 20``, ``beta > 8`` and ``D > 0``.

    Emits a ``UserWarning`` when ``1/(k2 D)`` exceeds 0.01.
    """
    if not k2 >= K2_MIN:
        raise GainError(f"k2 must be >= {K2_MIN:g}, got {k2}")
    if not beta > BETA_MIN:
        raise GainError(f"beta must be > {BETA_MIN:g}, got {beta}")
    if not D > 0:
        raise GainError(f"D must be positive, got {D}")
    a = A_DEFAULT
    c2 = 1.0 / (2.0 * beta * k2)
    g = Gains(k1=a * k2 * k2, k2=k2, C1=a * c2 / (4.0 * k2), C2=c2, D=D,
              M=beta * k2, beta=beta, a=a, mode="theorem")
    if not g.smallness_ok:
        warnings.warn(f"1/(k2 D) = {g.smallness:.3g} is not small (> {SMALLNESS})",
                      stacklevel=2)
    return g


def sat(x: float) -> float:
    """Standard saturation ``x / max(1, |x|)``."""
    return x / max(1.0, abs(x))


def compute_errors(target: TargetState, ref: ReferenceState, kappa_r: float) -> ErrorState:
    e_p = target.p - ref.p_r
    e_q = target.q - ref.q_r
    c, s = math.cos(ref.psi_r), math.sin(ref.psi_r)
    return ErrorState(e_p, e_q, target.theta - ref.psi_r, target.omega - kappa_r,
                      e_p * c + e_q * s, -e_p * s + e_q * c)


def control(err: ErrorState, g: Gains) -> tuple[float, float, float]:
    """Saturated feedback ``(u1, u2, outer_arg)``.

    ``outer_arg`` is the argument of the outer saturation in ``u2``; the
    saturation is inactive when ``|outer_arg| < 1``.
    """
    u1 = g.C1 * sat(err.y1)
    arg = (g.k1 * err.xi + g.k2 * err.eta + g.C2 * sat(err.y2)) / g.D
    return u1, -g.D * sat(arg), arg


def physical_controls(u1: float, u2: float, v_d: float, rho_r: float, kappa: float,
                      omega: float, vx: float, d: float) -> tuple[float, float, float]:
    """Reference speed ``u``, target curvature rate ``rho`` and steering ``rho0``."""
    u = v_d * (1.0 + u1)
    rho = rho_r * (1.0 + u1) + u2
    rho0 = kappa_dot(kappa, omega, vx, d) / vx
    return u, rho, rho0


def mu(kappa_r: float, u1: float) -> float:
    """Effective rotation rate ``kappa_r (1 + u1)`` of the error frame."""
    return kappa_r * (1.0 + u1)
