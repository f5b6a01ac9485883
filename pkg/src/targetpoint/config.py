"""INI configuration files for the command line.

Grammar: ``[section]`` headers followed by ``key = value`` lines; ``#`` and
``;`` start comments.  Every accepted key, its unit and default is listed in
:data:`SCHEMA`.  Values are resolved in increasing priority: defaults, file,
environment (``APP_<SECTION>_<KEY>``, e.g. ``APP_SIM_DT``), command-line
``--set section.key=value``.
"""

from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .controller import GainError, Gains, synthesize_gains
from .model import SpeedProfile
from .path import PathError, PathSpec
from .sim import ConfigError, InitialErrors, ReferencePose, SimConfig

ENV_PREFIX = "APP_"

# section -> key -> (type, default, description). ``None`` means optional/unset.
SCHEMA: dict[str, dict[str, tuple[type, Any, str]]] = {
    "path": {
        "kind": (str, "line", "line | circle | sine | clothoid | table"),
        "kappa_max": (float, None, "declared |kappa_r| bound [1/m]; defaults per kind"),
        "rho_r_max": (float, None, "declared |dkappa_r/ds| bound [1/m^2]; defaults per kind"),
        "kappa0": (float, 0.0, "circle curvature / clothoid start curvature [1/m]"),
        "amplitude": (float, 0.0, "sine curvature amplitude [1/m]"),
        "freq": (float, 0.0, "sine frequency in arclength [1/m]"),
        "sharpness": (float, 0.0, "clothoid dkappa/ds [1/m^2]"),
        "s_start": (float, 0.0, "clothoid domain start [m]"),
        "s_end": (float, None, "clothoid domain end [m]"),
        "table_file": (str, None, "table CSV with columns s,kappa (relative to the config file)"),
    },
    "vehicle": {
        "d": (float, 2.0, "target-point offset [m]"),
        "vx": (float, 5.0, "constant forward speed [m/s]"),
        "profile_times": (str, None, "comma-separated breakpoints [s], first must be 0"),
        "profile_values": (str, None, "comma-separated speeds [m/s]"),
        "v_min": (float, None, "lower speed bound [m/s]; default min of profile"),
        "v_max": (float, None, "upper speed bound [m/s]; default max of profile"),
    },
    "gains": {
        "mode": (str, "theorem", "theorem (from k2, beta, D) | manual (all six given)"),
        "k1": (float, None, "manual: xi gain"),
        "k2": (float, 200.0, "eta gain"),
        "C1": (float, None, "manual: speed saturation level"),
        "C2": (float, None, "manual: y2 saturation level"),
        "D": (float, 50.0, "outer saturation level"),
        "M": (float, None, "manual: Lyapunov weight; default 8.1*k2"),
        "beta": (float, 8.1, "theorem: must exceed 8"),
    },
    "init": {
        "e_p0": (float, 0.0, "initial target x-error [m]"),
        "e_q0": (float, 0.0, "initial target y-error [m]"),
        "xi0": (float, 0.0, "initial heading error [rad]"),
        "eta0": (float, 0.0, "initial curvature error [1/m]"),
        "kappa0": (float, None, "initial vehicle curvature [1/m]; overrides eta0"),
        "p_r0": (float, 0.0, "reference start x [m]"),
        "q_r0": (float, 0.0, "reference start y [m]"),
        "psi_r0": (float, 0.0, "reference start heading [rad]"),
        "s0": (float, 0.0, "reference start arclength [m]"),
    },
    "sim": {
        "dt": (float, 1e-3, "RK4 step [s]"),
        "t_end": (float, 60.0, "horizon [s]"),
        "seed": (int, 0, "seed for randomised steps"),
        "split": (float, 0.5, "fraction of the horizon before asymptotic monitors start"),
        "trace_every": (int, 1, "log every n-th step"),
        "ybox_c1": (float, 1.0, "Y-box half-width for y1 is ybox_c1/k2^2"),
        "ybox_c2": (float, 1.0, "Y-box half-width for y2 is ybox_c2/k2^1.5"),
        "workers": (int, 1, "parallel processes for sweeps"),
    },
    "analysis": {
        "riccati_tol": (float, 1e-8, "largest accepted Riccati residual"),
        "c_hat": (float, 10.0, "heuristic constant of the saturation-deactivation estimate"),
    },
}

ALIASES = {("gains", "d_sat"): "D"}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


@dataclass(frozen=True)
class Settings:
    """Resolved configuration: ``values[section][key]`` after all overrides."""

    values: dict[str, dict[str, Any]]
    base_dir: Path

    def get(self, section: str, key: str) -> Any:
        return self.values[section][key]


def _line_map(text: str) -> dict[tuple[str, str], int]:
    where: dict[tuple[str, str], int] = {}
    section = ""
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            continue
        m = _KEY_RE.match(line)
        if m:
            where.setdefault((section, m.group(1).strip().lower()), no)
    return where


def _convert(section: str, key: str, raw: str, where: str) -> Any:
    typ = SCHEMA[section][key][0]
    raw = raw.strip()
    if typ is str:
        return raw
    try:
        v = typ(raw)
    except ValueError:
        raise ConfigError(f"{where}: [{section}] {key} = {raw!r} is not a valid {typ.__name__}") from None
    if typ is float and not math.isfinite(v):
        raise ConfigError(f"{where}: [{section}] {key} must be finite")
    return v


def _canonical_key(section: str, key: str) -> str | None:
    if (section, key.lower()) in ALIASES:
        return ALIASES[section, key.lower()]
    for k in SCHEMA[section]:
        if k.lower() == key.lower():
            return k
    return None


def load_settings(path: str | Path | None = None, overrides: Mapping[str, str] | None = None,
                  environ: Mapping[str, str] | None = None) -> Settings:
    """Read ``path`` (optional), then apply environment and explicit overrides.

    Raises :class:`ConfigError` naming the file, line and key of any unknown
    section or key.
    """
    values = {sec: {k: spec[1] for k, spec in keys.items()} for sec, keys in SCHEMA.items()}
    base = Path(".")
    if path is not None:
        path = Path(path)
        base = path.parent
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            cp.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        lines = _line_map(text)
        for sec in cp.sections():
            if sec not in SCHEMA:
                no = next((n for n, ln in enumerate(text.splitlines(), start=1)
                           if (m := _SECTION_RE.match(ln)) and m.group(1).strip() == sec), "?")
                raise ConfigError(f"{path}:{no}: unknown section [{sec}]")
            for key, raw in cp.items(sec):
                no = lines.get((sec, key.lower()), "?")
                canon = _canonical_key(sec, key)
                if canon is None:
                    raise ConfigError(f"{path}:{no}: unknown key {key!r} in [{sec}]")
                values[sec][canon] = _convert(sec, canon, raw, f"{path}:{no}")
    environ = os.environ if environ is None else environ
    for name, raw in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        sec, _, key = rest.partition("_")
        if sec not in SCHEMA:
            continue  # not ours
        if _canonical_key(sec, key) is None:
            raise ConfigError(f"environment variable {name} names no known key in [{sec}]")
        canon = _canonical_key(sec, key)
        values[sec][canon] = _convert(sec, canon, raw, f"${name}")
    for dotted, raw in (overrides or {}).items():
        sec, _, key = dotted.partition(".")
        if sec not in SCHEMA or _canonical_key(sec, key) is None:
            raise ConfigError(f"override {dotted!r} names no known key")
        canon = _canonical_key(sec, key)
        values[sec][canon] = _convert(sec, canon, str(raw), f"--set {dotted}")
    return Settings(values, base)


def _floats(raw: str, what: str) -> list[float]:
    try:
        return [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"[vehicle] {what} must be a comma-separated list of numbers") from None


def build_path(st: Settings) -> PathSpec:
    p = st.values["path"]
    kind = p["kind"]
    kmax, rmax = p["kappa_max"], p["rho_r_max"]
    try:
        if kind == "line":
            return PathSpec.line(kmax if kmax is not None else 1e-3,
                                 rmax if rmax is not None else 1e-3)
        if kind == "circle":
            return PathSpec.circle(p["kappa0"], kmax, rmax if rmax is not None else 1e-3)
        if kind == "sine":
            return PathSpec.sine(p["amplitude"], p["freq"], kmax, rmax)
        if kind == "clothoid":
            if p["s_end"] is None:
                raise ConfigError("[path] clothoid needs s_end")
            return PathSpec.clothoid(p["sharpness"], (p["s_start"], p["s_end"]), p["kappa0"],
                                     kmax, rmax)
        if kind == "table":
            if p["table_file"] is None or kmax is None or rmax is None:
                raise ConfigError("[path] table needs table_file, kappa_max and rho_r_max")
            return PathSpec.from_csv(st.base_dir / p["table_file"], kmax, rmax)
    except PathError as exc:
        raise ConfigError(f"[path] {exc}") from None
    raise ConfigError(f"[path] unknown kind {kind!r}")


def build_speed(st: Settings) -> SpeedProfile:
    v = st.values["vehicle"]
    try:
        if v["profile_times"] is None and v["profile_values"] is None:
            return SpeedProfile.constant(v["vx"])
        if v["profile_times"] is None or v["profile_values"] is None:
            raise ConfigError("[vehicle] profile_times and profile_values go together")
        return SpeedProfile.piecewise(_floats(v["profile_times"], "profile_times"),
                                      _floats(v["profile_values"], "profile_values"),
                                      v["v_min"], v["v_max"])
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[vehicle] {exc}") from None


def build_gains(st: Settings) -> Gains:
    g = st.values["gains"]
    try:
        if g["mode"] == "theorem":
            return synthesize_gains(g["k2"], g["beta"], g["D"])
        if g["mode"] == "manual":
            missing = [k for k in ("k1", "C1", "C2") if g[k] is None]
            if missing:
                raise ConfigError(f"[gains] manual mode needs {', '.join(missing)}")
            M = g["M"] if g["M"] is not None else 8.1 * g["k2"]
            return Gains(g["k1"], g["k2"], g["C1"], g["C2"], g["D"], M, mode="manual")
    except GainError as exc:
        raise ConfigError(f"[gains] {exc}") from None
    raise ConfigError(f"[gains] unknown mode {g['mode']!r}")


def build_sim_config(st: Settings) -> SimConfig:
    i, s = st.values["init"], st.values["sim"]
    try:
        return SimConfig(
            d=st.values["vehicle"]["d"],
            speed=build_speed(st),
            path=build_path(st),
            gains=build_gains(st),
            init=InitialErrors(i["e_p0"], i["e_q0"], i["xi0"], i["eta0"], i["kappa0"]),
            ref=ReferencePose(i["p_r0"], i["q_r0"], i["psi_r0"], i["s0"]),
            dt=s["dt"], t_end=s["t_end"], seed=s["seed"], split=s["split"],
            ybox_c=(s["ybox_c1"], s["ybox_c2"]), trace_every=s["trace_every"],
        )
    except PathError as exc:
        raise ConfigError(str(exc)) from None


def describe_schema() -> str:
    """Plain-text listing of every key with its default, for ``--help``-style docs."""
    out = []
    for sec, keys in SCHEMA.items():
        out.append(f"[{sec}]")
        for k, (typ, default, doc) in keys.items():
            out.append(f"  {k} ({typ.__name__}, default {default!r}): {doc}")
    return "\n".join(out)
