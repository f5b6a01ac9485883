"""Kinematics of the vehicle, its target point and the virtual reference vehicle.

The closed-loop state vector used throughout the package is::

    (x, y, psi, kappa, omega, p_r, q_r, psi_r, s)

``omega`` (target-point curvature) is integrated from the control ``rho``;
``kappa`` (vehicle curvature) follows from it through the target-point
relation.  Headings are never wrapped.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .path import PathSpec

STATE_NAMES = ("x", "y", "psi", "kappa", "omega", "p_r", "q_r", "psi_r", "s")
IX, IY, IPSI, IKAPPA, IOMEGA, IPR, IQR, IPSIR, IS = range(9)


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    psi: float
    kappa: float


@dataclass(frozen=True)
class TargetState:
    p: float
    q: float
    theta: float
    omega: float


@dataclass(frozen=True)
class ReferenceState:
    p_r: float
    q_r: float
    psi_r: float
    s: float


@dataclass(frozen=True)
class SpeedProfile:
    """Forward speed ``V_x(t)``: piecewise constant, bounded in ``[v_min, v_max]``.

    ``values[i]`` applies from ``times[i]`` (``times[0]`` must be 0) up to the
    next breakpoint.
    """

    v_min: float
    v_max: float
    times: tuple[float, ...] = (0.0,)
    values: tuple[float, ...] = (5.0,)

    def __post_init__(self) -> None:
        if not 0 < self.v_min <= self.v_max:
            raise ValueError(f"need 0 < v_min <= v_max, got {self.v_min}, {self.v_max}")
        if len(self.times) != len(self.values) or not self.times or self.times[0] != 0.0:
            raise ValueError("speed profile needs matching times/values starting at t=0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("speed profile times must be strictly increasing")
        for v in self.values:
            if not self.v_min <= v <= self.v_max:
                raise ValueError(f"speed {v} outside [{self.v_min}, {self.v_max}]")

    @classmethod
    def constant(cls, vx: float) -> "SpeedProfile":
        return cls(vx, vx, (0.0,), (vx,))

    @classmethod
    def piecewise(cls, times: Sequence[float], values: Sequence[float],
                  v_min: float | None = None, v_max: float | None = None) -> "SpeedProfile":
        return cls(min(values) if v_min is None else v_min,
                   max(values) if v_max is None else v_max,
                   tuple(float(t) for t in times), tuple(float(v) for v in values))

    def __call__(self, t: float) -> float:
        if len(self.values) == 1:
            return self.values[0]
        return self.values[max(bisect.bisect_right(self.times, t) - 1, 0)]


def speed_factor(kappa: float, d: float) -> float:
    """``sqrt(1 + (kappa d)^2)``: ratio between target-point and vehicle speed."""
    return math.sqrt(1.0 + (kappa * d) ** 2)


def target_from_vehicle(v: VehicleState, d: float, vx: float) -> tuple[float, float, float, float]:
    """Target point pose and speed ``(p, q, theta, v_d)`` for a vehicle state."""
    p = v.x + d * math.cos(v.psi)
    q = v.y + d * math.sin(v.psi)
    theta = v.psi + math.atan(v.kappa * d)
    return p, q, theta, vx * speed_factor(v.kappa, d)


def kappa_dot(kappa: float, omega: float, vx: float, d: float) -> float:
    """Time derivative of the vehicle curvature given the target curvature ``omega``."""
    g = 1.0 + (kappa * d) ** 2
    return vx * g * (math.sqrt(g) * omega - kappa) / d


def omega_from_kappa(kappa: float, kdot: float, vx: float, d: float) -> float:
    """Invert :func:`kappa_dot` for ``omega``."""
    g = 1.0 + (kappa * d) ** 2
    return (kappa + d * kdot / (vx * g)) / math.sqrt(g)


def kappa_from_omega(omega: float, d: float) -> float:
    """Vehicle curvature with ``kappa_dot = 0`` for a given ``omega``.

    Solves ``sqrt(1 + (kappa d)^2) omega = kappa``; requires ``|omega| d < 1``.
    """
    w = omega * d
    if abs(w) >= 1.0:
        raise ValueError(
            f"|omega|*d = {abs(w):.6g} >= 1: no stationary vehicle curvature exists")
    return omega / math.sqrt(1.0 - w * w)


def rho0_recover(kdot: float, vx: float) -> float:
    """Physical steering control ``rho0 = kappa_dot / V_x``."""
    return kdot / vx


def closed_loop_rhs(state: Sequence[float], u1: float, u2: float, vx: float,
                    d: float, path: PathSpec) -> np.ndarray:
    """Derivative of the composite state under the controls ``(u1, u2)``."""
    x, y, psi, kap, om, pr, qr, psir, s = state
    vd = vx * speed_factor(kap, d)
    rho = path.dcurvature(s) * (1.0 + u1) + u2
    u = vd * (1.0 + u1)
    return np.array([
        vx * math.cos(psi),
        vx * math.sin(psi),
        vx * kap,
        kappa_dot(kap, om, vx, d),
        vd * rho,
        u * math.cos(psir),
        u * math.sin(psir),
        u * path.curvature(s),
        u,
    ])


def split_state(state: Sequence[float]) -> tuple[VehicleState, ReferenceState, float]:
    """Unpack a composite state into vehicle, reference and ``omega``."""
    x, y, psi, kap, om, pr, qr, psir, s = (float(v) for v in state)
    return VehicleState(x, y, psi, kap), ReferenceState(pr, qr, psir, s), om
