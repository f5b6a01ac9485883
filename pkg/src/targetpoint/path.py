"""Arclength-parameterized reference curvature profiles.

A path is described only by its signed curvature ``kappa(s)`` and the
declared bounds ``kappa_max`` / ``rho_r_max``.  The Cartesian shape is never
needed by the controller: the reference pose is integrated by the simulator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

KINDS = ("line", "circle", "sine", "clothoid", "table")

# Range sampled at construction for unbounded kinds.
DEFAULT_CHECK_RANGE = (0.0, 1000.0)
N_CHECK = 10_000
_BOUND_RTOL = 1e-12


class PathError(ValueError):
    """Invalid path definition (bounds violated, bad parameters)."""


class PathDomainError(PathError):
    """Arclength queried outside the domain of a bounded path."""


@dataclass(frozen=True)
class H1Verdict:
    ok: bool
    product: float  # d * kappa_max
    margin: float  # 1 - d * kappa_max

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class PathSpec:
    """Reference curvature profile.

    Parameters
    ----------
    kind : str
        One of ``line``, ``circle``, ``sine``, ``clothoid``, ``table``.
    kappa_max, rho_r_max : float
        Declared bounds on ``|kappa|`` [1/m] and ``|dkappa/ds|`` [1/m^2].
    kappa0 : float
        Circle curvature, or initial curvature of a clothoid segment.
    amplitude, freq : float
        Sine profile ``amplitude * sin(2 pi freq s)``.
    sharpness : float
        Clothoid rate ``dkappa/ds``.
    s_range : (float, float) or None
        Domain of clothoid / table paths.  For unbounded kinds it only sets
        the window sampled during validation.
    table_s, table_kappa : tuple of float
        Breakpoints of a piecewise-linear table.

    Use the ``line``/``circle``/... constructors rather than filling the
    fields by hand.
    """

    kind: str
    kappa_max: float
    rho_r_max: float
    kappa0: float = 0.0
    amplitude: float = 0.0
    freq: float = 0.0
    sharpness: float = 0.0
    s_range: tuple[float, float] | None = None
    table_s: tuple[float, ...] = field(default=(), repr=False)
    table_kappa: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise PathError(f"unknown path kind {self.kind!r}; expected one of {KINDS}")
        if not (self.kappa_max > 0 and math.isfinite(self.kappa_max)):
            raise PathError(f"kappa_max must be positive, got {self.kappa_max}")
        if not (self.rho_r_max > 0 and math.isfinite(self.rho_r_max)):
            raise PathError(f"rho_r_max must be positive, got {self.rho_r_max}")
        if self.kind == "table":
            s = np.asarray(self.table_s, dtype=float)
            if s.size < 2 or s.size != len(self.table_kappa):
                raise PathError("table path needs at least two (s, kappa) rows")
            if np.any(np.diff(s) <= 0):
                raise PathError("table arclengths must be strictly increasing")
            object.__setattr__(self, "s_range", (float(s[0]), float(s[-1])))
        if self.kind == "clothoid" and self.s_range is None:
            raise PathError("clothoid path needs an s_range")
        if self.s_range is not None and not self.s_range[0] < self.s_range[1]:
            raise PathError(f"empty s_range {self.s_range}")
        self._check_bounds()

    # -- constructors -----------------------------------------------------

    @classmethod
    def line(cls, kappa_max: float = 1e-3, rho_r_max: float = 1e-3) -> "PathSpec":
        return cls("line", kappa_max, rho_r_max)

    @classmethod
    def circle(cls, kappa0: float, kappa_max: float | None = None,
               rho_r_max: float = 1e-3) -> "PathSpec":
        return cls("circle", abs(kappa0) if kappa_max is None else kappa_max,
                   rho_r_max, kappa0=kappa0)

    @classmethod
    def sine(cls, amplitude: float, freq: float, kappa_max: float | None = None,
             rho_r_max: float | None = None) -> "PathSpec":
        kmax = abs(amplitude) if kappa_max is None else kappa_max
        rmax = abs(amplitude) * 2 * math.pi * abs(freq) if rho_r_max is None else rho_r_max
        return cls("sine", kmax, rmax, amplitude=amplitude, freq=freq)

    @classmethod
    def clothoid(cls, sharpness: float, s_range: tuple[float, float],
                 kappa0: float = 0.0, kappa_max: float | None = None,
                 rho_r_max: float | None = None) -> "PathSpec":
        if kappa_max is None:
            kappa_max = max(abs(kappa0 + sharpness * s) for s in s_range)
        if rho_r_max is None:
            rho_r_max = abs(sharpness)
        return cls("clothoid", kappa_max, rho_r_max, kappa0=kappa0,
                   sharpness=sharpness, s_range=tuple(s_range))

    @classmethod
    def table(cls, s: Sequence[float], kappa: Sequence[float],
              kappa_max: float, rho_r_max: float) -> "PathSpec":
        return cls("table", kappa_max, rho_r_max,
                   table_s=tuple(float(v) for v in s),
                   table_kappa=tuple(float(v) for v in kappa))

    @classmethod
    def from_csv(cls, path: str | Path, kappa_max: float, rho_r_max: float) -> "PathSpec":
        """Load a table path from a CSV file with columns ``s,kappa``."""
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or not {"s", "kappa"} <= set(rows[0]):
            raise PathError(f"{path}: expected CSV header with columns s,kappa")
        return cls.table([float(r["s"]) for r in rows],
                         [float(r["kappa"]) for r in rows], kappa_max, rho_r_max)

    # -- evaluation -------------------------------------------------------

    def _check_domain(self, s: float) -> None:
        if self.kind in ("clothoid", "table"):
            lo, hi = self.s_range
            if not lo <= s <= hi:
                raise PathDomainError(f"s={s} outside {self.kind} domain [{lo}, {hi}]")

    def curvature(self, s: float) -> float:
        self._check_domain(s)
        kind = self.kind
        if kind == "line":
            return 0.0
        if kind == "circle":
            return self.kappa0
        if kind == "sine":
            return self.amplitude * math.sin(2 * math.pi * self.freq * s)
        if kind == "clothoid":
            return self.kappa0 + self.sharpness * (s - self.s_range[0])
        return float(np.interp(s, self.table_s, self.table_kappa))

    def dcurvature(self, s: float) -> float:
        """``dkappa/ds``; right-hand derivative at table breakpoints."""
        self._check_domain(s)
        kind = self.kind
        if kind in ("line", "circle"):
            return 0.0
        if kind == "sine":
            w = 2 * math.pi * self.freq
            return self.amplitude * w * math.cos(w * s)
        if kind == "clothoid":
            return self.sharpness
        ts, tk = self.table_s, self.table_kappa
        i = int(np.searchsorted(ts, s, side="right")) - 1
        i = min(max(i, 0), len(ts) - 2)  # last breakpoint: left slope
        return (tk[i + 1] - tk[i]) / (ts[i + 1] - ts[i])

    def check_window(self) -> tuple[float, float]:
        return self.s_range if self.s_range is not None else DEFAULT_CHECK_RANGE

    def _check_bounds(self) -> None:
        lo, hi = self.check_window()
        grid = np.linspace(lo, hi, N_CHECK)
        if self.kind == "table":
            grid = np.union1d(grid, self.table_s)
        kap = np.array([self.curvature(s) for s in grid])
        dkap = np.array([self.dcurvature(s) for s in grid])
        kmax = float(np.max(np.abs(kap)))
        rmax = float(np.max(np.abs(dkap)))
        if kmax > self.kappa_max * (1 + _BOUND_RTOL):
            raise PathError(f"|kappa| reaches {kmax:.6g} > kappa_max={self.kappa_max}")
        if rmax > self.rho_r_max * (1 + _BOUND_RTOL):
            raise PathError(f"|dkappa/ds| reaches {rmax:.6g} > rho_r_max={self.rho_r_max}")

    def with_kappa_scale(self, kappa_max: float) -> "PathSpec":
        """Same profile shape rescaled so that its curvature bound is ``kappa_max``."""
        if self.kind == "line":
            return PathSpec.line(kappa_max, self.rho_r_max)
        f = kappa_max / self.kappa_max
        if self.kind == "circle":
            return PathSpec.circle(self.kappa0 * f, kappa_max, self.rho_r_max)
        if self.kind == "sine":
            return PathSpec.sine(self.amplitude * f, self.freq, kappa_max, self.rho_r_max * f)
        if self.kind == "clothoid":
            return PathSpec.clothoid(self.sharpness * f, self.s_range, self.kappa0 * f,
                                     kappa_max, self.rho_r_max * f)
        return PathSpec.table(self.table_s, [k * f for k in self.table_kappa],
                              kappa_max, self.rho_r_max * f)


def curvature_at(spec: PathSpec, s: float) -> float:
    """Reference curvature [1/m] at arclength ``s``."""
    return spec.curvature(s)


def dcurvature_at(spec: PathSpec, s: float) -> float:
    """Curvature rate ``rho_r = dkappa/ds`` [1/m^2] at arclength ``s``."""
    return spec.dcurvature(s)


def validate_h1(spec: PathSpec, d: float) -> H1Verdict:
    """Check ``d * kappa_max < 1`` (strict) for a target offset ``d``."""
    if not d > 0:
        raise PathError(f"target offset d must be positive, got {d}")
    prod = d * spec.kappa_max
    return H1Verdict(prod < 1.0, prod, 1.0 - prod)
