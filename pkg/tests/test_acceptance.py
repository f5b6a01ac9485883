"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed even
when output capture is on.
"""

import math
import time
import warnings
from importlib import resources

import numpy as np
import pytest

from targetpoint.analysis.iss import char_poly, iss_bounds, iss_monte_carlo
from targetpoint.analysis.l2gain import l2_gain_closed_form, l2_gain_sweep
from targetpoint.analysis.lyapunov import (lyapunov_matrix, sandwich_constants,
                                           v_positive_definite, violation_scaling)
from targetpoint.analysis.riccati import pk_asymptotics, riccati_solve
from targetpoint.analysis.stability import (blowup_margin, bootstrap_recursion,
                                            deactivation_bound, worst_case_kappa)
from targetpoint.config import build_sim_config, load_settings
from targetpoint.controller import synthesize_gains
from targetpoint.model import SpeedProfile
from targetpoint.path import PathSpec
from targetpoint.sim import InitialErrors, IntegrationBlowup, SimConfig, run, sweep

A = 3 / 16
K2_SET = (20, 50, 100, 200, 500, 1000)


def _data(name):
    return str(resources.files("targetpoint") / "data" / name)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, elapsed=None):
        took = f" [{elapsed:.2f} s]" if elapsed is not None else ""
        with capsys.disabled():
            print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}{took}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def reference_run():
    """The reference scenario, or the blow-up it ends in."""
    cfg = build_sim_config(load_settings(_data("paper_sec5.cfg")))
    t0 = time.perf_counter()
    try:
        tr, rep = run(cfg)
        return cfg, tr, rep, None, time.perf_counter() - t0
    except IntegrationBlowup as exc:
        return cfg, exc.trace, None, exc, time.perf_counter() - t0


def _rel(a, b):
    return abs(a - b) / abs(b)


def test_c01_gain_synthesis(report):
    t0 = time.perf_counter()
    g = synthesize_gains(200, 8.1, 50)
    exact = g.k1 == 7500.0
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k2, beta, D in zip(rng.uniform(20, 2000, 50), rng.uniform(8.01, 50, 50),
                           rng.uniform(1, 500, 50)):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            h = synthesize_gains(k2, beta, D)
        C2 = 1 / (2 * beta * k2)
        worst = max(worst, _rel(h.k1, A * k2 ** 2), _rel(h.C2, C2),
                    _rel(h.C1, A * C2 / (4 * k2)), _rel(h.M, beta * k2))
    report(1, exact and worst <= 1e-12,
           f"k1={g.k1!r}, worst relation error {worst:.2e} (tol 1e-12)", time.perf_counter() - t0)


def test_c02_l2_gain(report):
    t0 = time.perf_counter()
    bad = []
    for k2 in K2_SET:
        k1 = A * k2 ** 2
        cf = l2_gain_closed_form(k1, k2)
        sw = l2_gain_sweep(k1, k2)
        if not (1 < cf < 1.2 and _rel(sw.upsilon, cf) <= 1e-6 and 0.93 < sw.lambda_min < 1):
            bad.append((k2, cf, sw.upsilon, sw.lambda_min))
    el = time.perf_counter() - t0
    report(2, not bad and el < 1, f"gain in (1, 1.2), sweep agrees to 1e-6, lambda_min in "
           f"(0.93, 1) for k2 in {K2_SET}; failures {bad}", el)


def test_c03_riccati(report):
    t0 = time.perf_counter()
    res = {k2: riccati_solve(A * k2 ** 2, k2) for k2 in K2_SET}
    worst = max(s.residual for s in res.values())
    ok = all(s.ok and s.positive_definite and s.residual <= 1e-8 for s in res.values())
    el = time.perf_counter() - t0
    report(3, ok and el < 1, f"max residual {worst:.2e} (tol 1e-8), all P positive definite={ok}",
           el)


def test_c04_pk_asymptotics(report):
    t0 = time.perf_counter()
    rep = pk_asymptotics()
    el = time.perf_counter() - t0
    slopes = tuple(round(float(s), 4) for s in rep.slopes)
    report(4, rep.slopes_ok and rep.det_ok and el < 5,
           f"slopes {slopes} vs (1, 0, -1) +-0.05, F1F3 - F2^2 > 0: {rep.det_ok}", el)


def test_c05_lyapunov_pd(report):
    t0 = time.perf_counter()
    g = synthesize_gains(200, 8.1, 50)
    Q = lyapunov_matrix(g, riccati_solve(g.k1, g.k2).P)
    m, pd = v_positive_definite(Q)
    sw = sandwich_constants(Q, g.k2)
    el = time.perf_counter() - t0
    report(5, pd and sw.verified and sw.lower > 0 and sw.upper > 0 and el < 1,
           f"min eig {m:.4g}, sandwich ({sw.lower:.3g}, {sw.upper:.3g})", el)


def test_c06_iss(report):
    t0 = time.perf_counter()
    g = synthesize_gains(200, 8.1, 50)
    mc = iss_monte_carlo(g, 0.01, n_runs=100, seed=0)
    # refined bounds from a converging closed-loop run, once its y-sups satisfy the hypotheses
    cfg = build_sim_config(load_settings(_data("sec5_reduced.cfg"), {"sim.trace_every": "10"}))
    tr, _ = run(cfg)
    t = tr.column("t")
    suffix = lambda v: np.maximum.accumulate(np.abs(v)[::-1])[::-1]  # noqa: E731
    s1, s2 = suffix(tr.column("y1")), suffix(tr.column("y2"))
    hyp = (s1 < cfg.path.kappa_max) & (s2 < 1)
    refined_ok, detail = False, "y-sups never satisfy the refined hypotheses"
    if hyp.any():
        i = int(np.argmax(hyp))
        xb, eb = iss_bounds(cfg.gains, cfg.path.kappa_max, "refined", y1_sup=s1[i], y2_sup=s2[i])
        j = int(np.searchsorted(t, t[i] + 1.0))
        xs, es = np.abs(tr.column("xi")[j:]).max(), np.abs(tr.column("eta")[j:]).max()
        refined_ok = xs <= xb and es <= eb
        detail = f"refined from t={t[i]:.2f}: |xi| {xs:.2e} <= {xb:.2e}, |eta| {es:.2e} <= {eb:.2e}"
    el = time.perf_counter() - t0
    report(6, mc.ok and refined_ok and el < 30,
           f"MC 100 runs within asymptotic bounds: {mc.ok}; {detail}", el)


def test_c07_eigenstructure(report):
    worst = 0.0
    for k2 in K2_SET + (1e4,):
        k1 = A * k2 ** 2
        for lam in (-k2 / 4, -3 * k2 / 4):
            worst = max(worst, abs(char_poly(k1, k2, lam)) / k1)
    report(7, worst <= 1e-12, f"max |p(lambda)|/k1 = {worst:.1e} (tol 1e-12)")


def test_c08_reference_scenario(report, reference_run):
    cfg, tr, rep, exc, el = reference_run
    if exc is not None:
        report(8, False, f"integration blow-up: {exc}; |omega| d exceeds 1 and kappa escapes", el)
    u = tr.column("u")
    ok = (rep.final_error_norm < 0.1 and rep.control_bounds_ok
          and bool(np.all(u > 0)) and el < 10)
    report(8, ok, f"final error {rep.final_error_norm:.4g} m, bounds ok {rep.control_bounds_ok}, "
           f"min u {u.min():.4g}, sup|kappa| {rep.kappa_sup:.4g}", el)


def test_c09_vdot_decrease(report, reference_run):
    t0 = time.perf_counter()
    cfg, tr, rep, exc, _ = reference_run
    parts = []
    traj_ok = exc is None and rep.v_decrease_violations == 0
    parts.append("trajectory: " + (f"blow-up ({exc})" if exc is not None
                                   else f"{rep.v_decrease_violations} violations"))
    try:
        fit = violation_scaling((100, 200, 400))
        grid_ok = fit.ok
        parts.append(f"grid slopes ({fit.slope_y1:.3f}, {fit.slope_y2:.3f}) vs (-2, -1.5) +-20%")
    except RuntimeError as e:
        grid_ok = False
        parts.append(f"grid: {e}")
    el = time.perf_counter() - t0
    report(9, traj_ok and grid_ok and el < 60, "; ".join(parts), el)


def test_c10_saturation_deactivation(report, reference_run):
    t0 = time.perf_counter()
    cfg, tr, rep, exc, _ = reference_run
    if exc is None:
        run_ok = math.isfinite(rep.sat_deactivation_time) and rep.sat_deactivation_time < cfg.t_end
        run_msg = f"deactivation at t={rep.sat_deactivation_time:.4g}"
    else:
        run_ok, run_msg = False, f"reference run ended in blow-up ({exc})"
    Ds = (50.0, 500.0)
    emp = [deactivation_bound(synthesize_gains(200, 8.1, D), 0.01, 1.0, t_end=30.0).empirical
           for D in Ds]
    slope = math.log(emp[1] / emp[0]) / math.log(Ds[1] / Ds[0])
    report(10, run_ok and abs(slope + 1) <= 0.2,
           f"{run_msg}; limsup exponent {slope:.4f} vs -1 +-0.2", time.perf_counter() - t0)


def test_c11_no_blowup(report):
    t0 = time.perf_counter()
    eta_bar = 0.02
    bm = blowup_margin(2.0, 0.45, eta_bar)
    tr = worst_case_kappa(2.0, 0.45, eta_bar, t_end=2.0)
    ok = bm.ok and abs(tr.kappa[0]) == pytest.approx(2 * bm.trap_level) \
        and math.isfinite(tr.crossing_time) and np.all(np.isfinite(tr.kappa))
    report(11, bool(ok), f"margin {bm.margin:.4g}, K={bm.trap_level:.6g}, "
           f"from 2K below K at t={tr.crossing_time:.4g}", time.perf_counter() - t0)


def test_c12_integrator_order(report):
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g = synthesize_gains(20, 8.1, 50)
    cfg = SimConfig(d=2.0, speed=SpeedProfile.constant(5.0), path=PathSpec.circle(0.05), gains=g,
                    init=InitialErrors(10, 10, 0.1, 0), dt=2.5e-3, t_end=5.0, trace_every=100)
    rows = sweep(cfg, "dt", [2.5e-3, 1.25e-3, 6.25e-4])
    ratio = rows[0]["richardson_ratio"]
    report(12, abs(ratio - 16) <= 0.2 * 16, f"error ratio {ratio:.4f} vs 16 +-20%",
           time.perf_counter() - t0)


def test_c13_bootstrap(report):
    b = bootstrap_recursion(1.0, 100, 1.0, 1.0, 20)
    ok = b.contractive and b.factor_bound < 1 and b.ratios_bounded and b.pair_sum[-1] <= 1e-12
    report(13, ok, f"factor {b.factor_bound:.6g} < 1, pair sum at n=20 {b.pair_sum[-1]:.2e}")
