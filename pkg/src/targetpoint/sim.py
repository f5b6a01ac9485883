"""Fixed-step closed-loop simulation with live monitors."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import model
from .analysis.lyapunov import decrease_target, lyapunov_matrix, vdot_exact
from .analysis.riccati import riccati_solve
from .controller import Gains, compute_errors, control, physical_controls, synthesize_gains
from .model import STATE_NAMES, ReferenceState, SpeedProfile, TargetState
from .path import PathSpec, validate_h1

TRACE_COLUMNS = (
    "t", "s", "x", "y", "psi", "kappa", "p", "q", "theta", "omega", "p_r", "q_r",
    "psi_r", "kappa_r", "e_p", "e_q", "xi", "eta", "y1", "y2", "u1", "u2", "u",
    "rho", "rho0", "v_d", "V", "sat_arg",
)
STIFFNESS_LIMIT = 5.0  # dt * k2 * D
SWEEP_AXES = ("k2", "D", "dt", "xi0", "kappa_max", "d")


class ConfigError(ValueError):
    pass


class InitializationError(ValueError):
    pass


class IntegrationBlowup(RuntimeError):
    """A Runge-Kutta stage produced a non-finite value."""

    def __init__(self, t: float, component: str, trace: "Trace | None" = None):
        super().__init__(f"non-finite {component} at t={t:.6g}")
        self.t = t
        self.component = component
        self.trace = trace


@dataclass(frozen=True)
class InitialErrors:
    e_p0: float = 0.0
    e_q0: float = 0.0
    xi0: float = 0.0
    eta0: float = 0.0
    kappa0: float | None = None  # if given, overrides eta0 (omega follows from kappa)


@dataclass(frozen=True)
class ReferencePose:
    p_r0: float = 0.0
    q_r0: float = 0.0
    psi_r0: float = 0.0
    s0: float = 0.0


@dataclass(frozen=True)
class SimConfig:
    d: float
    speed: SpeedProfile
    path: PathSpec
    gains: Gains
    init: InitialErrors = InitialErrors()
    ref: ReferencePose = ReferencePose()
    dt: float = 1e-3
    t_end: float = 60.0
    seed: int = 0
    split: float = 0.5  # monitors for asymptotic claims start at split * t_end
    ybox_c: tuple[float, float] = (1.0, 1.0)  # Y-box |y1| <= c1/k2^2, |y2| <= c2/k2^1.5
    trace_every: int = 1

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.t_end > self.dt:
            raise ConfigError(f"t_end must exceed dt, got t_end={self.t_end}, dt={self.dt}")
        if not self.d > 0:
            raise ConfigError(f"d must be positive, got {self.d}")
        h1 = validate_h1(self.path, self.d)
        if not h1.ok:
            raise ConfigError(
                f"hypothesis H1 violated: d*kappa_max = {h1.product:.6g} must be < 1")
        if not 0.0 <= self.split < 1.0:
            raise ConfigError(f"split must lie in [0, 1), got {self.split}")
        if self.trace_every < 1:
            raise ConfigError("trace_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def warnings(self) -> list[str]:
        out = []
        stiff = self.dt * self.gains.k2 * self.gains.D
        if stiff > STIFFNESS_LIMIT:
            out.append(f"dt*k2*D = {stiff:.6g} exceeds {STIFFNESS_LIMIT:g}; "
                       "the saturated eta-dynamics may be under-resolved")
        if not self.gains.smallness_ok:
            out.append(f"1/(k2*D) = {self.gains.smallness:.6g} is not small")
        return out


@dataclass
class Trace:
    columns: tuple[str, ...] = TRACE_COLUMNS
    rows: list[tuple[float, ...]] = field(default_factory=list)

    def array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(-1, len(self.columns))

    def column(self, name: str) -> np.ndarray:
        return self.array()[:, self.columns.index(name)]

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class MonitorReport:
    v_decrease_violations: int
    v_decrease_checked: int
    sat_deactivation_time: float  # inf if the outer saturation is still active at t_end
    kappa_sup: float
    control_bounds_ok: bool
    final_error_norm: float
    xi_final: float
    eta_final: float
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return (self.v_decrease_violations == 0 and self.control_bounds_ok
                and math.isfinite(self.sat_deactivation_time))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["warnings"] = " | ".join(self.warnings)
        d["ok"] = self.ok
        return d


def rk4_step(state, t: float, dt: float,
             rhs: Callable[[float, np.ndarray], np.ndarray]) -> np.ndarray:
    """One classical Runge-Kutta step; raises :class:`IntegrationBlowup` on non-finite stages."""
    state = np.asarray(state, dtype=float)
    h2 = 0.5 * dt
    k1 = rhs(t, state)
    _check_finite(k1, t)
    k2 = rhs(t + h2, state + h2 * k1)
    _check_finite(k2, t + h2)
    k3 = rhs(t + h2, state + h2 * k2)
    _check_finite(k3, t + h2)
    k4 = rhs(t + dt, state + dt * k3)
    _check_finite(k4, t + dt)
    out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_finite(out, t + dt)
    return out


def _check_finite(v: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(v)):
        i = int(np.flatnonzero(~np.isfinite(v))[0])
        name = STATE_NAMES[i] if v.size == len(STATE_NAMES) else f"component {i}"
        raise IntegrationBlowup(t, name)


def init_states(cfg: SimConfig) -> np.ndarray:
    """Composite initial state reproducing the configured tracking errors.

    The vehicle curvature starts at rest (``kappa_dot = 0``) unless
    ``init.kappa0`` is given, in which case ``omega`` follows from it.
    """
    d, ini, ref = cfg.d, cfg.init, cfg.ref
    kr0 = cfg.path.curvature(ref.s0)
    p = ref.p_r0 + ini.e_p0
    q = ref.q_r0 + ini.e_q0
    theta = ref.psi_r0 + ini.xi0
    if ini.kappa0 is None:
        omega = kr0 + ini.eta0
        try:
            kappa = model.kappa_from_omega(omega, d)
        except ValueError as exc:
            raise InitializationError(
                f"cannot initialise kappa from omega={omega:.6g} with d={d}: {exc}") from exc
    else:
        kappa = ini.kappa0
        omega = model.omega_from_kappa(kappa, 0.0, cfg.speed(0.0), d)
    psi = theta - math.atan(kappa * d)
    x = p - d * math.cos(psi)
    y = q - d * math.sin(psi)
    return np.array([x, y, psi, kappa, omega, ref.p_r0, ref.q_r0, ref.psi_r0, ref.s0])


class ClosedLoop:
    """Right-hand side and per-step diagnostics of the controlled system."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        g = cfg.gains
        sol = riccati_solve(g.k1, g.k2)
        self.P = sol.P
        self.Q = lyapunov_matrix(g, sol.P) if sol.P is not None else None

    def feedback(self, state) -> tuple:
        """Errors and controls at ``state``."""
        cfg = self.cfg
        d = cfg.d
        x, y, psi, kap, om, pr, qr, psir, s = state
        kr = cfg.path.curvature(s)
        p = x + d * math.cos(psi)
        q = y + d * math.sin(psi)
        theta = psi + math.atan(kap * d)
        err = compute_errors(TargetState(p, q, theta, om), ReferenceState(pr, qr, psir, s), kr)
        u1, u2, arg = control(err, cfg.gains)
        return err, kr, p, q, theta, u1, u2, arg

    def rhs(self, t: float, state) -> np.ndarray:
        _, _, _, _, _, u1, u2, _ = self.feedback(state)
        return model.closed_loop_rhs(state, u1, u2, self.cfg.speed(t), self.cfg.d, self.cfg.path)

    def rhs_scalar(self, t: float, st: Sequence[float]) -> tuple[float, ...]:
        """Same as :meth:`rhs` on plain floats; the integration hot path."""
        cfg, g = self.cfg, self.cfg.gains
        d = cfg.d
        x, y, psi, kap, om, pr, qr, psir, s = st
        kr = cfg.path.curvature(s)
        cp, sp = math.cos(psi), math.sin(psi)
        e_p = x + d * cp - pr
        e_q = y + d * sp - qr
        cr, sr = math.cos(psir), math.sin(psir)
        y1 = e_p * cr + e_q * sr
        y2 = -e_p * sr + e_q * cr
        xi = psi + math.atan(kap * d) - psir
        s1 = y1 / max(1.0, abs(y1))
        s2 = y2 / max(1.0, abs(y2))
        u1 = g.C1 * s1
        arg = (g.k1 * xi + g.k2 * (om - kr) + g.C2 * s2) / g.D
        u2 = -g.D * arg / max(1.0, abs(arg))
        vx = cfg.speed(t)
        gk = 1.0 + (kap * d) ** 2
        sq = math.sqrt(gk)
        vd = vx * sq
        u = vd * (1.0 + u1)
        return (vx * cp, vx * sp, vx * kap, vx * gk * (sq * om - kap) / d,
                vd * (cfg.path.dcurvature(s) * (1.0 + u1) + u2),
                u * cr, u * sr, u * kr, u)

    def row(self, t: float, state) -> tuple[float, ...]:
        cfg = self.cfg
        err, kr, p, q, theta, u1, u2, arg = self.feedback(state)
        x, y, psi, kap, om, pr, qr, psir, s = (float(v) for v in state)
        vx = cfg.speed(t)
        vd = vx * model.speed_factor(kap, cfg.d)
        u, rho, rho0 = physical_controls(u1, u2, vd, cfg.path.dcurvature(s), kap, om, vx, cfg.d)
        z = (err.xi, err.eta, err.y1, err.y2)
        V = float(np.asarray(z) @ self.Q @ np.asarray(z)) if self.Q is not None else math.nan
        return (t, s, x, y, psi, kap, p, q, theta, om, pr, qr, psir, kr, err.e_p, err.e_q,
                err.xi, err.eta, err.y1, err.y2, u1, u2, u, rho, rho0, vd, V, arg)


def _blowup(loop: ClosedLoop, st, t: float, dt: float, trace: Trace) -> IntegrationBlowup:
    """Replay the failing step stage by stage to name the offending component."""
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            rk4_step(np.array(st), t, dt, loop.rhs)
        except IntegrationBlowup as exc:
            exc.trace = trace
            return exc
        except (OverflowError, ValueError):
            pass
    return IntegrationBlowup(t, "state", trace)


def _integrate(cfg: SimConfig, loop: ClosedLoop) -> tuple[Trace, np.ndarray]:
    """Fixed-step RK4 on plain floats, logging every ``trace_every`` steps."""
    state = init_states(cfg)
    trace = Trace()
    trace.rows.append(loop.row(0.0, state))
    n, dt, every = cfg.n_steps, cfg.dt, cfg.trace_every
    h2, h6 = 0.5 * dt, dt / 6.0
    f = loop.rhs_scalar
    isfinite = math.isfinite
    st = tuple(float(v) for v in state)
    for i in range(n):
        t = i * dt
        try:
            k1 = f(t, st)
            k2 = f(t + h2, tuple(a + h2 * b for a, b in zip(st, k1)))
            k3 = f(t + h2, tuple(a + h2 * b for a, b in zip(st, k2)))
            k4 = f(t + dt, tuple(a + dt * b for a, b in zip(st, k3)))
            nxt = tuple(a + h6 * (b + 2.0 * c + 2.0 * e + h)
                        for a, b, c, e, h in zip(st, k1, k2, k3, k4))
            finite = isfinite(sum(nxt))
        except (OverflowError, ValueError):  # math.cos(inf) raises ValueError
            finite = False
        if not finite:
            raise _blowup(loop, st, t, dt, trace)
        st = nxt
        if (i + 1) % every == 0 or i + 1 == n:
            trace.rows.append(loop.row((i + 1) * dt, st))
    return trace, np.array(st)


def run(cfg: SimConfig) -> tuple[Trace, MonitorReport]:
    """Integrate from ``t = 0`` to ``t_end`` and evaluate the monitors."""
    loop = ClosedLoop(cfg)
    trace, _ = _integrate(cfg, loop)
    return trace, monitor(cfg, trace, loop)


def monitor(cfg: SimConfig, trace: Trace, loop: ClosedLoop | None = None) -> MonitorReport:
    loop = ClosedLoop(cfg) if loop is None else loop
    g = cfg.gains
    arr = trace.array()
    col = {name: arr[:, i] for i, name in enumerate(trace.columns)}
    tol = 1e-12
    bounds_ok = bool(
        np.all(np.abs(col["u1"]) <= g.C1 * (1 + tol))
        and np.all(np.abs(col["u2"]) <= g.D * (1 + tol))
        and np.all(col["u"] > 0)
        and np.all(col["u"] >= col["v_d"] * (1 - g.C1) * (1 - tol))
    )
    active = np.flatnonzero(np.abs(col["sat_arg"]) >= 1.0)
    if active.size == 0:
        t_deact = float(col["t"][0])
    elif active[-1] == arr.shape[0] - 1:
        t_deact = math.inf
    else:
        t_deact = float(col["t"][active[-1] + 1])

    violations = checked = 0
    if loop.P is not None:
        c1, c2 = cfg.ybox_c
        box1, box2 = c1 / g.k2 ** 2, c2 / g.k2 ** 1.5
        t_split = cfg.split * cfg.t_end
        for r in np.flatnonzero(col["t"] >= t_split):
            y1, y2 = col["y1"][r], col["y2"][r]
            if abs(y1) <= box1 and abs(y2) <= box2:
                continue
            z = (col["xi"][r], col["eta"][r], y1, y2)
            checked += 1
            if vdot_exact(z, col["kappa_r"][r], g, loop.P) > decrease_target(z, g):
                violations += 1
    last = arr[-1]
    return MonitorReport(
        v_decrease_violations=violations,
        v_decrease_checked=checked,
        sat_deactivation_time=t_deact,
        kappa_sup=float(np.max(np.abs(col["kappa"]))),
        control_bounds_ok=bounds_ok,
        final_error_norm=float(math.hypot(last[trace.columns.index("e_p")],
                                          last[trace.columns.index("e_q")])),
        xi_final=float(last[trace.columns.index("xi")]),
        eta_final=float(last[trace.columns.index("eta")]),
        warnings=tuple(cfg.warnings()),
    )


def final_state(cfg: SimConfig) -> np.ndarray:
    """Composite state at ``t_end`` without building a trace."""
    return _integrate(replace(cfg, trace_every=cfg.n_steps), ClosedLoop(cfg))[1]


def vary(cfg: SimConfig, axis: str, value: float) -> SimConfig:
    """Copy of ``cfg`` with one sweep parameter changed."""
    if axis == "k2":
        return replace(cfg, gains=cfg.gains.with_k2(value))
    if axis == "D":
        g = cfg.gains
        if g.mode == "theorem":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return replace(cfg, gains=synthesize_gains(g.k2, g.beta, value))
        return replace(cfg, gains=g.with_D(value))
    if axis == "dt":
        return replace(cfg, dt=value)
    if axis == "xi0":
        return replace(cfg, init=replace(cfg.init, xi0=value))
    if axis == "kappa_max":
        return replace(cfg, path=cfg.path.with_kappa_scale(value))
    if axis == "d":
        return replace(cfg, d=value)
    raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


SWEEP_FIELDS = ("value", "status", "error", "v_decrease_violations", "v_decrease_checked",
                "sat_deactivation_time", "kappa_sup", "control_bounds_ok",
                "final_error_norm", "xi_final", "eta_final", "richardson_ratio")


def _sweep_row(args) -> dict:
    cfg, axis, value = args
    row = dict.fromkeys(SWEEP_FIELDS, "")
    row["value"] = value
    try:
        c = vary(cfg, axis, value)
        loop = ClosedLoop(c)
        trace, state = _integrate(c, loop)
        rep = monitor(c, trace, loop)
        row.update({k: v for k, v in rep.as_dict().items() if k in row})
        row["status"] = "ok" if rep.ok else "monitor_failure"
        row["_final"] = state
    except IntegrationBlowup as exc:
        row["status"], row["error"] = "blowup", str(exc)
    except (ConfigError, InitializationError, ValueError) as exc:
        row["status"], row["error"] = "config_error", str(exc)
    return row


def sweep(cfg: SimConfig, axis: str, values: Sequence[float], workers: int = 1) -> list[dict]:
    """One independent run per value, ordered by value.

    For a ``dt`` sweep the ``richardson_ratio`` column holds
    ``|x(h) - x(h/2)| / |x(h/2) - x(h/4)|`` on the final states, which tends
    to 16 for a fourth-order method when successive steps halve.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    values = sorted(float(v) for v in values)
    if axis == "dt":
        values = values[::-1]  # coarse to fine
    jobs = [(cfg, axis, v) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    if axis == "dt":
        for i in range(len(rows) - 2):
            f = [r.get("_final") for r in rows[i:i + 3]]
            if any(x is None for x in f):
                continue
            den = float(np.linalg.norm(f[1] - f[2]))
            if den > 0:
                rows[i]["richardson_ratio"] = float(np.linalg.norm(f[0] - f[1])) / den
    for r in rows:
        r.pop("_final", None)
    return rows
