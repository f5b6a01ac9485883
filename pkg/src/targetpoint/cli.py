"""Command-line entry point: ``targetpoint {simulate,gains,certify,sweep}``.

Exit codes: 0 success, 1 certification or monitor failure, 2 configuration
error, 3 numerical blow-up.
"""

from __future__ import annotations

import argparse
import csv
import sys
import warnings
from pathlib import Path
from typing import Iterable, Sequence

from .analysis.certify import certify
from .analysis.stability import H1Error
from .config import build_gains, build_sim_config, load_settings
from .controller import GainError, synthesize_gains
from .sim import (SWEEP_AXES, SWEEP_FIELDS, ConfigError, InitializationError,
                  IntegrationBlowup, Trace, run, sweep)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3


def fmt(v) -> str:
    """Deterministic CSV cell: 17 significant digits for floats."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def write_trace(path: Path, trace: Trace) -> None:
    write_csv(path, trace.columns, trace.rows)


class _Out:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, *msg) -> None:
        if not self.quiet:
            print(*msg)

    @staticmethod
    def err(*msg) -> None:
        print("error:", *msg, file=sys.stderr)


def _settings(args):
    overrides = dict(kv.split("=", 1) for kv in args.set or [] if "=" in kv)
    bad = [kv for kv in args.set or [] if "=" not in kv]
    if bad:
        raise ConfigError(f"--set expects section.key=value, got {bad[0]!r}")
    if args.seed is not None:
        overrides["sim.seed"] = str(args.seed)
    return load_settings(args.config, overrides)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args, say: _Out) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cfg = build_sim_config(_settings(args))
    out = _outdir(args)
    notes = [str(w.message) for w in caught] + cfg.warnings()
    for n in notes:
        say(f"warning: {n}")
    try:
        trace, rep = run(cfg)
    except IntegrationBlowup as exc:
        if exc.trace is not None:
            write_trace(out / "trace.csv", exc.trace)
        (out / "report.txt").write_text(
            "".join(f"warning: {n}\n" for n in notes) + f"integration blow-up: {exc}\n")
        _Out.err(f"integration blow-up: {exc}")
        return EXIT_BLOWUP
    write_trace(out / "trace.csv", trace)
    d = rep.as_dict()
    d["warnings"] = " | ".join(notes)
    write_csv(out / "monitors.csv", ["monitor", "value"], d.items())
    lines = [f"warning: {n}" for n in notes]
    lines += [f"{k} = {fmt(v)}" for k, v in d.items() if k != "warnings"]
    lines.append("monitors: " + ("pass" if rep.ok else "FAIL"))
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    say(f"final error norm {rep.final_error_norm:.6g} m, monitors {'pass' if rep.ok else 'FAIL'}")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_gains(args, say: _Out) -> int:
    if args.config is not None and args.k2 is None:
        st = _settings(args)
        with warnings.catch_warnings(record=True):
            warnings.simplefilter("always")
            g = build_gains(st)
    else:
        k2 = 200.0 if args.k2 is None else args.k2
        try:
            with warnings.catch_warnings(record=True):
                warnings.simplefilter("always")
                g = synthesize_gains(k2, args.beta, args.D)
        except GainError as exc:
            raise ConfigError(str(exc)) from None
    for name in ("k1", "k2", "C1", "C2", "D", "M"):
        print(f"{name} = {fmt(float(getattr(g, name)))}")
    verdict = "small enough" if g.smallness_ok else "NOT small enough (> 0.01)"
    print(f"1/(k2*D) = {fmt(g.smallness)}: {verdict}")
    return EXIT_OK


def cmd_certify(args, say: _Out) -> int:
    st = _settings(args)
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        cfg = build_sim_config(st)
    kmax = cfg.path.kappa_max
    try:
        cert = certify(cfg.gains, cfg.d, kmax, riccati_tol=st.get("analysis", "riccati_tol"),
                       c_hat=st.get("analysis", "c_hat"))
    except H1Error as exc:
        raise ConfigError(f"hypothesis H1 violated: {exc}") from None
    out = _outdir(args)
    write_csv(out / "certificate.csv", ["quantity", "value"], cert.rows())
    (out / "summary.txt").write_text(cert.summary())
    say(cert.summary().rstrip())
    return EXIT_OK if cert.ok else EXIT_FAIL


def cmd_sweep(args, say: _Out) -> int:
    st = _settings(args)
    if args.axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {args.axis!r}; expected one of {SWEEP_AXES}")
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--values must be comma-separated numbers, got {args.values!r}") from None
    if not values:
        raise ConfigError("--values is empty")
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        cfg = build_sim_config(st)
    workers = args.workers if args.workers is not None else st.get("sim", "workers")
    rows = sweep(cfg, args.axis, values, workers=workers)
    out = _outdir(args)
    write_csv(out / "sweep.csv", SWEEP_FIELDS, ([r[k] for k in SWEEP_FIELDS] for r in rows))
    for r in rows:
        say(f"{args.axis}={fmt(r['value'])}: {r['status']}")
    if any(r["status"] == "blowup" for r in rows):
        return EXIT_BLOWUP
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_FAIL


def _globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="INI configuration file")
    p.add_argument("--out", default=argparse.SUPPRESS if suppress else ".",
                   help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=d, help="overrides [sim] seed")
    p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS if suppress else False)
    p.add_argument("--set", action="append", default=argparse.SUPPRESS if suppress else None,
                   metavar="SECTION.KEY=VALUE", help="override one config key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="targetpoint",
                                description="Simulate and certify the target-point path follower.")
    _globals(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", help="run one closed-loop simulation")
    _globals(s, suppress=True)
    s = sub.add_parser("gains", help="synthesize theorem gains")
    _globals(s, suppress=True)
    s.add_argument("--k2", type=float)
    s.add_argument("--beta", type=float, default=8.1)
    s.add_argument("--D", type=float, default=50.0)
    s = sub.add_parser("certify", help="run every numerical check on the configured gains")
    _globals(s, suppress=True)
    s = sub.add_parser("sweep", help="one simulation per parameter value")
    _globals(s, suppress=True)
    s.add_argument("--axis", required=True, help=f"one of {', '.join(SWEEP_AXES)}")
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--workers", type=int)
    return p


COMMANDS = {"simulate": cmd_simulate, "gains": cmd_gains, "certify": cmd_certify,
            "sweep": cmd_sweep}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    say = _Out(args.quiet)
    try:
        return COMMANDS[args.command](args, say)
    except (ConfigError, InitializationError) as exc:
        _Out.err(exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
