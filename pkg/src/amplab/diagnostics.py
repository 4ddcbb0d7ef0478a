"""Agreement between AMP iterates and state evolution, and across ensembles.

Joint laws are compared through a panel of polynomial test functions plus
1-D Wasserstein-2 distances of each Gaussian column against its predicted
variance.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .polynomial import MultiPoly, monomials_up_to
from .stateevo import SEResult

PANEL_DEGREE = 3
PANEL_CAP = 60
Z_LIMIT = 3.0


class LabelMismatch(ValueError):
    pass


def w2_gaussian_1d(samples, variance: float) -> float:
    """W2 distance between the empirical law of ``samples`` and
    ``N(0, variance)``, using Gaussian quantiles at ``(i - 1/2)/n``."""
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    q = np.sqrt(variance) * gaussian_midpoint_quantiles(n)
    return float(np.sqrt(np.mean((x - q) ** 2)))


def gaussian_midpoint_quantiles(n: int) -> np.ndarray:
    """Standard normal quantiles at ``(i - 1/2)/n``, exactly antisymmetric."""
    p = (np.arange(1, n + 1) - 0.5) / n
    q = stats.norm.ppf(p)
    return 0.5 * (q - q[::-1])


@dataclass
class EmpiricalRows:
    X: np.ndarray
    labels: list

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[1] != len(self.labels):
            raise LabelMismatch(f"{self.X.shape} rows for {len(self.labels)} labels")
        if len(set(self.labels)) != len(self.labels):
            raise LabelMismatch("labels must be unique")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("rows contain NaN or infinite values")

    @classmethod
    def from_trajectory(cls, traj) -> "EmpiricalRows":
        labels, X = traj.rows()
        return cls(X, labels)

    @property
    def n(self) -> int:
        return self.X.shape[0]


def default_panel(d: int, max_degree: int = PANEL_DEGREE, cap: int = PANEL_CAP) -> list:
    """Monomials of total degree 1..max_degree in ``d`` variables, lowest
    degree first, truncated to ``cap`` functions."""
    return [MultiPoly.monomial(e) for e in monomials_up_to(d, max_degree)[:cap]]


@dataclass
class Report:
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"summary": self.summary, "rows": self.rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        if not self.rows:
            return ""
        buf = io.StringIO()
        keys = list(self.rows[0].keys())
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.items()})
        return buf.getvalue()


def _mean_se(v: np.ndarray):
    n = v.shape[0]
    return float(np.mean(v)), float(np.std(v, ddof=1) / np.sqrt(n)) if n > 1 else 0.0


def se_layout(se: SEResult):
    """Labels and SE-law samples in the same column order as
    :meth:`AmpTrajectory.rows`, plus the labels of the Gaussian columns."""
    s = se.samples
    if not s:
        raise ValueError("SEResult carries no Monte Carlo samples; rerun the recursion")
    F = s["F"]
    gauss_key, prefix = ("Z", "z") if se.kind == "goe" else ("Y", "y")
    cols = [s["U"][:, 0]] + [F[:, j] for j in range(F.shape[1])] + [s[gauss_key][:, t] for t in range(se.T)]
    labels = ["u1"] + [f"f{j + 1}" for j in range(F.shape[1])] + [f"{prefix}{t + 1}" for t in range(se.T)]
    return labels, np.column_stack(cols), [f"{prefix}{t + 1}" for t in range(se.T)]


def compare_to_se(rows: EmpiricalRows, se: SEResult, panel: Optional[Sequence[MultiPoly]] = None,
                  z_limit: float = Z_LIMIT) -> Report:
    """Panel z-scores, per-column W2 against ``Sigma_t[t, t]`` and the
    max-entry gap between the empirical covariance of the Gaussian columns
    and ``Sigma_T``."""
    labels, S, glabels = se_layout(se)
    if list(rows.labels) != labels:
        raise LabelMismatch(f"rows have labels {rows.labels}, SE layout is {labels}")
    d = len(labels)
    panel = default_panel(d) if panel is None else list(panel)
    out = []
    worst = 0.0
    for p in panel:
        if p.k != d:
            raise LabelMismatch(f"test function has {p.k} variables, rows have {d}")
        em, ems = _mean_se(p(rows.X))
        sm, sms = _mean_se(p(S))
        scale = np.hypot(ems, sms)
        z = 0.0 if em == sm else (float((em - sm) / scale) if scale > 0 else float("inf"))
        worst = max(worst, abs(z))
        out.append({"function": repr(p), "empirical": em, "empirical_se": ems,
                    "predicted": sm, "predicted_se": sms, "z": z})
    gidx = [labels.index(g) for g in glabels]
    G = rows.X[:, gidx]
    w2 = {g: w2_gaussian_1d(G[:, t], float(se.Sigma[t, t])) for t, g in enumerate(glabels)}
    cov_gap = float(np.max(np.abs(G.T @ G / rows.n - se.Sigma))) if glabels else 0.0
    frac = float(np.mean([abs(r["z"]) <= z_limit for r in out])) if out else 1.0
    summary = {"n_functions": len(out), "max_abs_z": worst, "fraction_within": frac,
               "w2": w2, "cov_gap": cov_gap, "z_limit": z_limit}
    return Report(out, summary)


def cross_ensemble_report(groups: dict, panel: Optional[Sequence[MultiPoly]] = None,
                          z_limit: float = Z_LIMIT, pass_fraction: float = 0.95) -> Report:
    """Pairwise comparison of seed-averaged panel means.

    ``groups`` maps an ensemble name to a list of :class:`EmpiricalRows`
    (one per seed).  Each ensemble's value for a test function is the mean
    over seeds of the row average, with standard error from the spread
    across seeds.  A pair agrees on a function when the difference is
    within ``z_limit`` combined standard errors.
    """
    names = list(groups)
    if len(names) < 2:
        raise ValueError("need at least two ensembles")
    labels = list(groups[names[0]][0].labels)
    for nm in names:
        for r in groups[nm]:
            if list(r.labels) != labels:
                raise LabelMismatch(f"ensemble {nm!r} has labels {r.labels}, expected {labels}")
    panel = default_panel(len(labels)) if panel is None else list(panel)
    stats_ = {}
    for nm in names:
        per_seed = np.array([[float(np.mean(p(r.X))) for p in panel] for r in groups[nm]])
        mean = per_seed.mean(axis=0)
        se = per_seed.std(axis=0, ddof=1) / np.sqrt(per_seed.shape[0]) if per_seed.shape[0] > 1 \
            else np.zeros(len(panel))
        stats_[nm] = (mean, se)
    rows = []
    pairs = {}
    for a, b in combinations(names, 2):
        (ma, sa), (mb, sb) = stats_[a], stats_[b]
        diff = ma - mb
        comb = np.hypot(sa, sb)
        ok = np.where(comb > 0, np.abs(diff) <= z_limit * comb, diff == 0)
        for i, p in enumerate(panel):
            rows.append({"pair": f"{a}|{b}", "function": repr(p), "mean_a": float(ma[i]),
                         "mean_b": float(mb[i]), "difference": float(diff[i]),
                         "combined_se": float(comb[i]), "within": bool(ok[i])})
        frac = float(np.mean(ok))
        pairs[f"{a}|{b}"] = {"fraction_within": frac, "all_within": bool(np.all(ok)),
                             "universal": frac >= pass_fraction}
    return Report(rows, {"pairs": pairs, "z_limit": z_limit, "pass_fraction": pass_fraction,
                         "n_functions": len(panel)})
