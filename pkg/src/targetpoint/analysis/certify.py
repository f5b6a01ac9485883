"""Aggregate every numerical check on a gain set into one certificate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..controller import Gains
from .iss import iss_bounds
from .l2gain import l2_gain_closed_form, l2_gain_sweep
from .lyapunov import lyapunov_matrix, v_positive_definite
from .riccati import riccati_solve
from .stability import blowup_margin

RICCATI_TOL = 1e-8
RELATION_TOL = 1e-12
SAT_C_HAT = 10.0  # heuristic constant of the deactivation estimate


@dataclass(frozen=True)
class GainCertificate:
    gains: Gains
    d: float
    kappa_max: float
    upsilon_L: float
    lambda_min: float
    P_k: np.ndarray | None
    riccati_residual: float
    V_matrix: np.ndarray | None
    V_min_eig: float
    iss_xi: float
    iss_eta: float
    blowup_margin: float
    sat_margin: float
    relation_errors: dict[str, float]
    verdicts: dict[str, bool] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.verdicts.items() if not v]

    def rows(self) -> list[tuple[str, str]]:
        """Flat ``(key, value)`` pairs for CSV output."""
        out: list[tuple[str, str]] = []
        g = self.gains
        for name in ("k1", "k2", "C1", "C2", "D", "M"):
            out.append((f"gain_{name}", _fmt(getattr(g, name))))
        out += [("gain_mode", g.mode), ("d", _fmt(self.d)), ("kappa_max", _fmt(self.kappa_max)),
                ("upsilon_L", _fmt(self.upsilon_L)), ("lambda_min", _fmt(self.lambda_min))]
        P = self.P_k if self.P_k is not None else np.full((2, 2), math.nan)
        out += [("P11", _fmt(P[0, 0])), ("P12", _fmt(P[0, 1])), ("P22", _fmt(P[1, 1])),
                ("riccati_residual", _fmt(self.riccati_residual))]
        if self.V_matrix is not None:
            for i in range(4):
                for j in range(i, 4):
                    out.append((f"V{i + 1}{j + 1}", _fmt(self.V_matrix[i, j])))
        out += [("V_min_eig", _fmt(self.V_min_eig)), ("iss_xi", _fmt(self.iss_xi)),
                ("iss_eta", _fmt(self.iss_eta)), ("blowup_margin", _fmt(self.blowup_margin)),
                ("sat_margin", _fmt(self.sat_margin))]
        out += [(f"relation[{k}]", _fmt(v)) for k, v in self.relation_errors.items()]
        out += [(f"verdict_{k}", "pass" if v else "fail") for k, v in self.verdicts.items()]
        return out

    def summary(self) -> str:
        lines = [f"gain mode: {self.gains.mode}",
                 f"1/(k2*D) = {self.gains.smallness:.6g} "
                 f"({'small' if self.gains.smallness_ok else 'NOT small'})"]
        for k, v in self.verdicts.items():
            lines.append(f"{'PASS' if v else 'FAIL'}  {k}")
        bad = [k for k, v in self.relation_errors.items() if abs(v) > RELATION_TOL]
        if bad:
            lines.append("gain relations not satisfied: " + "; ".join(bad))
        lines.append("certified" if self.ok else "NOT certified: " + ", ".join(self.failed()))
        return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def certify(g: Gains, d: float, kappa_max: float, riccati_tol: float = RICCATI_TOL,
            c_hat: float = SAT_C_HAT) -> GainCertificate:
    """Run every check for gains ``g`` on a path with curvature bound ``kappa_max``.

    The outer-saturation estimate uses disturbance bounds ``kappa_max`` and 1.
    """
    ups = l2_gain_closed_form(g.k1, g.k2)
    lam = l2_gain_sweep(g.k1, g.k2).lambda_min
    sol = riccati_solve(g.k1, g.k2)
    if sol.P is not None:
        Q = lyapunov_matrix(g, sol.P)
        vmin, pd = v_positive_definite(Q)
    else:
        Q, vmin, pd = None, math.nan, False
    xi_b, eta_b = iss_bounds(g, kappa_max, mode="asymptotic")
    bm = blowup_margin(d, kappa_max, eta_b)
    sat_margin = c_hat * g.smallness * (kappa_max + 1.0)
    rel = g.relation_errors()
    verdicts = {
        "l2_gain_in_(1,1.2)": 1.0 < ups < 1.2,
        "lambda_min_positive": lam > 0,
        "riccati_solved": sol.ok and sol.residual <= riccati_tol,
        "riccati_P_positive_definite": sol.positive_definite,
        "V_positive_definite": pd,
        "gain_relations": all(abs(v) <= RELATION_TOL for v in rel.values()),
        "smallness_1/(k2D)": g.smallness_ok,
        "blowup_margin_positive": bm.ok,
        "saturation_deactivates": sat_margin < 1.0,
    }
    return GainCertificate(g, d, kappa_max, ups, lam, sol.P, sol.residual, Q, vmin,
                           xi_b, eta_b, bm.margin, sat_margin, rel, verdicts)
