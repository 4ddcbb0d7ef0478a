"""Reproducible batch experiments.

Every random stream is derived from ``(master seed, trial, stream[, extra])``
with the splitting rule in :mod:`amplab.rng`.  Trials run on a thread pool
capped by the ``AMPLAB_THREADS`` environment variable; results are merged in
trial order, so the artifact set does not depend on the thread count.

An output directory holds ``manifest.json`` (config echo, library version,
generator, seeds and a SHA-256 for every deterministic file),
``summary.json``, per-trial CSVs and ``timing.json``.  Wall-clock times live
only in ``timing.json``, which the manifest lists without a hash.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .amp import (AmpConfig, amp_run_cs, amp_run_rect, amp_run_sym, bernoulli_gauss,
                  cs_sensing_operator, donoho_tanner)
from .combinat import (IndependentMoments, SpectralMoments, limval_invariant_sym,
                       limval_wigner_sym)
from .config import ExperimentConfig
from .diagnostics import EmpiricalRows, compare_to_se, cross_ensemble_report
from .ensembles import (RectEnsembleSpec, SymEnsembleSpec, sample_rectangular, sample_sbm,
                        sample_symmetric, sbm_memberships, sinkhorn_scale)
from .fastops import DenseOperator
from .io import dumps_json, format_csv, sha256_file
from .nonlinear import NonlinearitySpec, spec_from_config, tanh_latest
from .polynomial import MultiPoly
from .rng import (GENERATOR_NAME, SPLITTING_RULE, STREAM_INIT, STREAM_MATRIX, STREAM_SE,
                  STREAM_SIGNAL, derive_seed, make_rng)
from .spectral import SpectralSpec, mp_quantiles
from .stateevo import InitLaw, SEModel, se_goe, se_whitenoise
from .tensornet import DiagonalTensorNetwork, network_from_dict, tn_eval, trees_up_to

VOLATILE_FILES = ("timing.json",)
DENSE_KINDS = ("GOE", "GeneralizedWigner", "SBMCentered", "GaussianWhiteNoise", "GeneralizedWhiteNoise")


class ResourceCapExceeded(RuntimeError):
    pass


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("AMPLAB_THREADS", "1")))
    except ValueError:
        return 1


def map_trials(fn, items):
    """``[fn(x) for x in items]`` on the worker pool, in input order."""
    items = list(items)
    threads = thread_count()
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class ExperimentResult:
    summary: dict
    ok: bool
    files: dict = field(default_factory=dict)  # relative path -> text
    seeds: dict = field(default_factory=dict)


# ---------------------------------------------------------------- helpers


def sbm_probabilities(n: int, log_factor: float, lam: float):
    """``(p, q)`` with mean ``log_factor * log(n)/n`` and signal strength
    ``lam``."""
    pbar = log_factor * math.log(n) / n
    gap = 2.0 * math.sqrt(lam * pbar * (1.0 - pbar) / n)
    p, q = pbar + gap / 2, pbar - gap / 2
    if not (0 <= q < p <= 1):
        raise ValueError(f"SBM parameters give p={p}, q={q}")
    return p, q


def resolve_sym_spec(d: dict, n: int) -> SymEnsembleSpec:
    d = dict(d)
    if "sbm_log_factor" in d:
        d["p_n"], d["q_n"] = sbm_probabilities(n, d.pop("sbm_log_factor"), d.pop("sbm_lambda", 0.0))
    d.pop("sbm_lambda", None)
    return SymEnsembleSpec.from_dict(d)


def resolve_rect_spec(d: dict, m: int, n: int) -> RectEnsembleSpec:
    d = dict(d)
    if d.get("kind") == "RectInvariant" and "singular_value_law" not in d:
        d["singular_value_law"] = {"kind": "marchenko_pastur", "params": {"gamma": m / n}}
    return RectEnsembleSpec.from_dict(d)


def _check_dense(kind: str, entries: int, cap: int):
    if kind in DENSE_KINDS and entries > cap:
        raise ResourceCapExceeded(f"{kind} would store {entries} entries (cap {cap})")


def _se_seed(cfg):
    return derive_seed(cfg.seed, 0, STREAM_SE)


def _moment_rows(traj, pred_z, pred_y=None):
    rows = []
    zsq = np.mean(traj.z ** 2, axis=0)
    ysq = np.mean(traj.y ** 2, axis=0) if traj.y is not None else None
    for t in range(traj.T):
        row = [t + 1, zsq[t], pred_z[t], abs(zsq[t] - pred_z[t]) / pred_z[t] if pred_z[t] > 0 else 0.0]
        if ysq is not None:
            row += [ysq[t], pred_y[t], abs(ysq[t] - pred_y[t]) / pred_y[t] if pred_y[t] > 0 else 0.0]
        rows.append(row)
    return rows


def pooled_rel_err(moments, predicted) -> np.ndarray:
    """Relative error of the seed-averaged second moments: ``moments`` is
    ``(seeds, T)``, ``predicted`` is ``(T,)``."""
    avg = np.mean(np.asarray(moments, dtype=np.float64), axis=0)
    pred = np.asarray(predicted, dtype=np.float64)
    return np.where(pred > 0, np.abs(avg - pred) / np.where(pred > 0, pred, 1.0), np.abs(avg))


def _trial_name(i: int) -> str:
    return f"trial_{i:04d}"


# ---------------------------------------------------------------- symmetric AMP


def _sym_trials(cfg, spec_dict, ens_index, se, u_spec, init):
    p = cfg.params
    n = p["n"]
    spec = resolve_sym_spec(spec_dict, n)
    _check_dense(spec.kind, n * n, p["max_dense_entries"])

    def one(trial):
        op = sample_symmetric(spec, n, derive_seed(cfg.seed, trial, STREAM_MATRIX, ens_index))
        u1, F = init.sample_u(n, make_rng(cfg.seed, trial, STREAM_INIT))
        ac = AmpConfig(op, u1, u_spec, p["T"], F=F, mode=p["coef_mode"], se=se, deriv_mode=p["deriv_mode"])
        t0 = time.perf_counter()
        traj = amp_run_sym(ac)
        return traj, time.perf_counter() - t0

    return map_trials(one, range(cfg.trials))


def _run_sym(cfg: ExperimentConfig, ensembles) -> ExperimentResult:
    p = cfg.params
    T = p["T"]
    if T == 0 or cfg.trials == 0:
        return ExperimentResult({"experiment": cfg.kind, "ok": True, "results": {}}, True)
    init = InitLaw.from_dict(p["init"])
    u_spec = spec_from_config(p["nonlinearity"])
    se = se_goe(SEModel(init, u_spec, T, N=p["se_samples"], seed=_se_seed(cfg), deriv_mode=p["deriv_mode"]))
    pred = np.diag(se.Sigma)
    files = {"se.json": se.to_json() + "\n"}
    results, groups, timing = {}, {}, {}
    ok = True
    header = ["t", "z_sq", "predicted", "rel_err"]
    for e, (name, spec_dict) in enumerate(ensembles):
        out = _sym_trials(cfg, spec_dict, e, se, u_spec, init)
        errs, moms = [], []
        groups[name] = []
        for i, (traj, secs) in enumerate(out):
            rows = _moment_rows(traj, pred)
            errs.append([r[3] for r in rows])
            moms.append([r[1] for r in rows])
            files[f"trials/{name}/{_trial_name(i)}.csv"] = format_csv(header, rows)
            groups[name].append(EmpiricalRows.from_trajectory(traj))
            timing[f"{name}/{_trial_name(i)}"] = secs
        pooled = pooled_rel_err(moms, pred)
        passed = bool(np.all(pooled <= p["tolerance"]))
        ok &= passed
        rep = compare_to_se(groups[name][0], se)
        results[name] = {"rel_err": pooled.tolist(), "mean_abs_rel_err": np.mean(errs, axis=0).tolist(),
                         "max_rel_err": np.max(errs, axis=0).tolist(), "pass": passed,
                         "compare_to_se_trial0": rep.summary}
    summary = {"experiment": cfg.kind, "se_diag": pred.tolist(), "tolerance": p["tolerance"],
               "ensembles": results}
    if len(groups) > 1 and cfg.trials > 1:
        cross = cross_ensemble_report(groups, z_limit=p["z_limit"], pass_fraction=p["pass_fraction"])
        files["cross_ensemble.csv"] = cross.to_csv()
        summary["cross_ensemble"] = cross.summary
        ok &= all(v["universal"] for v in cross.summary["pairs"].values())
    summary["ok"] = bool(ok)
    return ExperimentResult(summary, bool(ok), files, {"timing": timing})


def run_se_check(cfg):
    return _run_sym(cfg, [(cfg.params["ensemble"]["kind"], cfg.params["ensemble"])])


def run_universality_sym(cfg):
    return _run_sym(cfg, [(e["name"], e["spec"]) for e in cfg.params["ensembles"]])


# ---------------------------------------------------------------- rectangular AMP


def run_universality_rect(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    m, n, T = p["m"], p["n"], p["T"]
    if T == 0 or cfg.trials == 0:
        return ExperimentResult({"experiment": cfg.kind, "ok": True, "results": {}}, True)
    init = InitLaw.from_dict(p["init"])
    u_spec = spec_from_config(p["u_nonlinearity"])
    v_spec = spec_from_config(p["v_nonlinearity"])
    se = se_whitenoise(SEModel(init, u_spec, T, v_spec=v_spec, gamma=m / n, N=p["se_samples"],
                               seed=_se_seed(cfg), deriv_mode=p["deriv_mode"]))
    pz, py = np.diag(se.Omega), np.diag(se.Sigma)
    files = {"se.json": se.to_json() + "\n"}
    header = ["t", "z_sq", "omega", "z_rel_err", "y_sq", "sigma", "y_rel_err"]
    results, groups, timing = {}, {}, {}
    ok = True
    for e, ens in enumerate(p["ensembles"]):
        name = ens["name"]
        spec = resolve_rect_spec(ens["spec"], m, n)
        _check_dense(spec.kind, m * n, p["max_dense_entries"])

        def one(trial, spec=spec, e=e):
            op = sample_rectangular(spec, m, n, derive_seed(cfg.seed, trial, STREAM_MATRIX, e))
            rng = make_rng(cfg.seed, trial, STREAM_INIT)
            u1, F = init.sample_u(m, rng)
            G = init.sample_g(n, rng)
            ac = AmpConfig(op, u1, u_spec, T, F=F, v_spec=v_spec, G=G, mode=p["coef_mode"], se=se,
                           deriv_mode=p["deriv_mode"])
            t0 = time.perf_counter()
            traj = amp_run_rect(ac)
            return traj, time.perf_counter() - t0

        zerr, yerr, zmom, ymom = [], [], [], []
        groups[name] = []
        for i, (traj, secs) in enumerate(map_trials(one, range(cfg.trials))):
            rows = _moment_rows(traj, pz, py)
            zerr.append([r[3] for r in rows])
            yerr.append([r[6] for r in rows])
            zmom.append([r[1] for r in rows])
            ymom.append([r[4] for r in rows])
            files[f"trials/{name}/{_trial_name(i)}.csv"] = format_csv(header, rows)
            groups[name].append(EmpiricalRows.from_trajectory(traj))
            timing[f"{name}/{_trial_name(i)}"] = secs
        mz, my = pooled_rel_err(zmom, pz), pooled_rel_err(ymom, py)
        passed = bool(np.all(mz <= p["tolerance"]) and np.all(my <= p["tolerance"]))
        ok &= passed
        results[name] = {"z_rel_err": mz.tolist(), "y_rel_err": my.tolist(),
                         "mean_abs_z_rel_err": np.mean(zerr, axis=0).tolist(),
                         "mean_abs_y_rel_err": np.mean(yerr, axis=0).tolist(), "pass": passed}
    summary = {"experiment": cfg.kind, "gamma": m / n, "omega_diag": pz.tolist(), "sigma_diag": py.tolist(),
               "tolerance": p["tolerance"], "ensembles": results}
    if len(groups) > 1 and cfg.trials > 1:
        cross = cross_ensemble_report(groups, z_limit=p["z_limit"], pass_fraction=p["pass_fraction"])
        files["cross_ensemble.csv"] = cross.to_csv()
        summary["cross_ensemble"] = cross.summary
        ok &= all(v["universal"] for v in cross.summary["pairs"].values())
    summary["ok"] = bool(ok)
    return ExperimentResult(summary, bool(ok), files, {"timing": timing})


# ---------------------------------------------------------------- tensor networks


def _x_sampler(laws):
    def draw(n, rng):
        cols = []
        for law in laws:
            if law == "normal":
                cols.append(rng.standard_normal(n))
            else:
                cols.append(2.0 * rng.integers(0, 2, n) - 1.0)
        return np.column_stack(cols)

    return draw


def network_limit(net: DiagonalTensorNetwork, spec: SymEnsembleSpec, momX):
    """Limit value of ``net`` for an ensemble: the Wigner formula for
    Wigner-type ensembles, the invariant formula otherwise."""
    if spec.kind == "SymInvariant":
        return limval_invariant_sym(net, momX, SpectralMoments(spec.eigenvalue_law))
    return limval_wigner_sym(net, momX)


def run_tn_universality(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    n = p["n"]
    net = network_from_dict(p["network"])
    laws = p["x_laws"] if len(p["x_laws"]) == net.k else [p["x_laws"][0]] * net.k
    momX = IndependentMoments(laws)
    draw = _x_sampler(laws)
    results, files, timing = {}, {}, {}
    ok = True
    for e, ens in enumerate(p["ensembles"]):
        name = ens["name"]
        spec = resolve_sym_spec(ens["spec"], n)
        _check_dense(spec.kind, n * n, p["max_dense_entries"])
        lim = network_limit(net, spec, momX)

        def one(trial, spec=spec, e=e):
            t0 = time.perf_counter()
            op = sample_symmetric(spec, n, derive_seed(cfg.seed, trial, STREAM_MATRIX, e))
            x = draw(n, make_rng(cfg.seed, trial, STREAM_SIGNAL))
            return tn_eval(net, op, x), time.perf_counter() - t0

        out = map_trials(one, range(cfg.trials))
        vals = np.array([v for v, _ in out])
        for i, (_, secs) in enumerate(out):
            timing[f"{name}/{_trial_name(i)}"] = secs
        files[f"trials/{name}.csv"] = format_csv(["trial", "value"], [[i, v] for i, v in enumerate(vals)])
        mean = float(vals.mean()) if vals.size else float("nan")
        se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else float("nan")
        limit = float(lim.value)
        z = (mean - limit) / se if se and se > 0 else (0.0 if mean == limit else float("inf"))
        passed = bool(abs(z) <= p["z_limit"])
        ok &= passed
        results[name] = {"limit": limit, "mc_mean": mean, "mc_se": se, "z": z, "pass": passed,
                         "note": lim.note}
    summary = {"experiment": cfg.kind, "n": n, "network": p["network"], "ensembles": results, "ok": bool(ok)}
    return ExperimentResult(summary, bool(ok), files, {"timing": timing})


def run_limval_audit(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    k = p["k"]
    labels = [MultiPoly.from_list(k, lab) for lab in p["labels"]]
    laws = p["x_laws"] if len(p["x_laws"]) == k else [p["x_laws"][0]] * k
    momX = IndependentMoments(laws)
    momD = SpectralMoments(SpectralSpec.from_dict(p["eigenvalue_law"]))
    rows = []
    ok = True
    for idx, edges in enumerate(trees_up_to(p["max_edges"])):
        nv = len(edges) + 1
        net = DiagonalTensorNetwork([labels[v % len(labels)] for v in range(nv)], edges, k)
        wig = limval_wigner_sym(net, momX).value
        chains = limval_invariant_sym(net, momX, momD, route="chains").value
        moeb = limval_invariant_sym(net, momX, momD, route="moebius").value
        agree = bool(chains == moeb)
        ok &= agree
        rows.append([idx, nv, " ".join(f"{a}-{b}" for a, b in edges), float(wig), float(chains), float(moeb),
                     agree])
    files = {"limits.csv": format_csv(["tree", "vertices", "edges", "wigner", "invariant_chains",
                                       "invariant_moebius", "routes_agree"], rows)}
    summary = {"experiment": cfg.kind, "n_trees": len(rows), "routes_agree": bool(ok), "ok": bool(ok)}
    return ExperimentResult(summary, bool(ok), files)


# ---------------------------------------------------------------- SBM


def z2sync_prediction(lam: float, eps: float, T: int, order: int = 120):
    """Scalar recursion for ``u_{t+1} = tanh(z_t)`` on ``sqrt(lam)/n f f^T + W``
    with ``u_1 = eps f + G``: returns per-step overlaps ``E[F U_{t+1}]`` and
    second moments ``E[Z_t^2]``."""
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    m, q = eps, eps * eps + 1.0
    overlaps, zsq = [], []
    for _ in range(T):
        mu, sig = math.sqrt(lam) * m, math.sqrt(q)
        zsq.append(mu * mu + q)
        vals = np.tanh(mu + sig * x)
        m, q = float(np.sum(w * vals)), float(np.sum(w * vals * vals))
        overlaps.append(m)
    return np.array(overlaps), np.array(zsq)


def run_sbm_z2sync(cfg: ExperimentConfig) -> ExperimentResult:
    """AMP with ``tanh`` on the normalized SBM adjacency and on a Z2
    synchronization matrix with GOE noise and the same signal strength;
    both should follow the same scalar recursion."""
    p = cfg.params
    n, T, eps = p["n"], p["T"], p["init_signal"]
    if T == 0 or cfg.trials == 0:
        return ExperimentResult({"experiment": cfg.kind, "ok": True, "results": {}}, True)
    _check_dense("GOE", n * n, p["max_dense_entries"])
    pp, qq = sbm_probabilities(n, p["sbm_log_factor"], p["sbm_lambda"])
    pbar = 0.5 * (pp + qq)
    lam = n * (pp - qq) ** 2 / (4 * pbar * (1 - pbar))
    pred_overlap, pred_zsq = z2sync_prediction(lam, eps, T)
    u_spec = NonlinearitySpec([tanh_latest()])

    def one(trial):
        out = {}
        t0 = time.perf_counter()
        for e, model in enumerate(("sbm", "z2_goe")):
            seed = derive_seed(cfg.seed, trial, STREAM_MATRIX, e)
            if model == "sbm":
                s = sample_sbm(n, pp, qq, seed)
                Y, f = (s.A - pbar) / math.sqrt(n * pbar * (1 - pbar)), s.f
            else:
                rng = make_rng(seed)
                f = sbm_memberships(n, rng)
                W = sample_symmetric(SymEnsembleSpec("GOE"), n, derive_seed(seed, 1)).A
                Y = math.sqrt(lam) / n * np.outer(f, f) + W
            g = make_rng(cfg.seed, trial, STREAM_INIT).standard_normal(n)
            traj = amp_run_sym(AmpConfig(DenseOperator(Y, symmetric=True), eps * f + g, u_spec, T))
            out[model] = ((traj.u[:, 1:] * f[:, None]).mean(axis=0), np.mean(traj.z ** 2, axis=0))
        return out, time.perf_counter() - t0

    res = map_trials(one, range(cfg.trials))
    files, timing, results = {}, {}, {}
    ok = True
    for model in ("sbm", "z2_goe"):
        ov = np.array([r[0][model][0] for r in res])
        zs = np.array([r[0][model][1] for r in res])
        rows = [[t + 1, ov[:, t].mean(), pred_overlap[t], zs[:, t].mean(), pred_zsq[t]] for t in range(T)]
        files[f"{model}.csv"] = format_csv(["t", "overlap", "predicted_overlap", "z_sq", "predicted_z_sq"], rows)
        gap = np.abs(ov.mean(axis=0) - pred_overlap)
        passed = bool(np.all(gap <= p["tolerance"]))
        ok &= passed
        results[model] = {"overlap_gap": gap.tolist(), "pass": passed}
    for i, (_, secs) in enumerate(res):
        timing[_trial_name(i)] = secs
    summary = {"experiment": cfg.kind, "p_n": pp, "q_n": qq, "lambda_n": lam,
               "predicted_overlap": pred_overlap.tolist(), "models": results, "ok": bool(ok)}
    return ExperimentResult(summary, bool(ok), files, {"timing": timing})


# ---------------------------------------------------------------- compressed sensing


def boundary_mask(ref_rates, band=(0.05, 0.95)) -> np.ndarray:
    """Grid points in the transition band of the reference success curve:
    rates strictly inside ``band`` plus the two points around each crossing
    of 1/2."""
    r = np.asarray(ref_rates, dtype=np.float64)
    mask = (r > band[0]) & (r < band[1])
    for i in range(len(r) - 1):
        if (r[i] - 0.5) * (r[i + 1] - 0.5) <= 0 and r[i] != r[i + 1]:
            mask[i] = mask[i + 1] = True
    return mask


def run_cs_phase_diagram(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    n, T = p["n"], p["T"]
    ens = p["ensembles"]
    rel = np.asarray(p["rho_relative"], dtype=np.float64)
    units = [(d, t) for d in range(len(p["deltas"])) for t in range(cfg.trials)]
    curves = {}
    for d, delta in enumerate(p["deltas"]):
        m = int(round(delta * n))
        rho_dt, alpha = donoho_tanner(m / n)
        curves[d] = (m, rho_dt, alpha, np.minimum(rel * rho_dt * m / n, 1.0))

    def one(unit):
        d, trial = unit
        m, rho_dt, alpha, eps = curves[d]
        rng = make_rng(cfg.seed, trial, STREAM_SIGNAL, d)
        X = np.column_stack([bernoulli_gauss(n, e, rng)[:, 0] for e in eps])
        out = {}
        t0 = time.perf_counter()
        for e, kind in enumerate(ens):
            op = cs_sensing_operator(kind, m, n, derive_seed(cfg.seed, trial, STREAM_MATRIX, d, e))
            res = amp_run_cs(op, op.matvec(X), alpha=alpha, T=T, x_true=X, on_divergence="mark")
            out[kind] = res.rel_err[-1] if T > 0 else np.ones(len(eps))
        return out, time.perf_counter() - t0

    res = map_trials(one, units)
    files, timing, deltas_out = {}, {}, {}
    ok = True
    for (d, trial), (_, secs) in zip(units, res):
        timing[f"delta_{d}/{_trial_name(trial)}"] = secs
    for d, delta in enumerate(p["deltas"]):
        m, rho_dt, alpha, eps = curves[d]
        errs = {k: np.array([r[0][k] for (dd, _), r in zip(units, res) if dd == d]).reshape(cfg.trials, -1)
                for k in ens}
        rates = {k: (errs[k] <= p["success_tol"]).mean(axis=0) if cfg.trials else np.zeros(len(rel))
                 for k in ens}
        ref = rates[ens[0]]
        mask = boundary_mask(ref, tuple(p["boundary_band"]))
        rows = []
        max_diff = 0.0
        for i in range(len(rel)):
            diffs = [abs(rates[k][i] - ref[i]) for k in ens[1:]]
            dmax = max(diffs) if diffs else 0.0
            if not mask[i]:
                max_diff = max(max_diff, dmax)
            rows.append([rel[i], rel[i] * rho_dt, *[rates[k][i] for k in ens], dmax, bool(mask[i])])
        files[f"success_delta_{d}.csv"] = format_csv(
            ["rho_relative", "rho", *[f"success_{k}" for k in ens], "max_difference", "boundary"], rows)
        passed = bool(max_diff <= p["max_difference"])
        ok &= passed
        deltas_out[str(delta)] = {"m": m, "rho_dt": rho_dt, "alpha": alpha,
                                  "success": {k: rates[k].tolist() for k in ens},
                                  "boundary": mask.tolist(), "max_offboundary_difference": max_diff,
                                  "pass": passed}
    summary = {"experiment": cfg.kind, "n": n, "T": T, "deltas": deltas_out, "ok": bool(ok)}
    return ExperimentResult(summary, bool(ok), files, {"timing": timing})


# ---------------------------------------------------------------- Sinkhorn


def heteroskedastic_noise(profile: str, m: int, n: int, rng, missing_p: float = 0.3):
    """Mean-zero noise ``E`` and its variance matrix ``V`` for a rank-one
    count model or a missing-data model."""
    a = rng.uniform(0.5, 3.0, m)
    b = rng.uniform(0.5, 3.0, n)
    Xt = np.outer(a, b)
    if profile == "poisson_rank1":
        Y = rng.poisson(Xt).astype(np.float64)
        return Y - Xt, Xt
    keep = rng.random((m, n)) < missing_p
    Y = np.where(keep, Xt, 0.0)
    return Y - missing_p * Xt, missing_p * (1 - missing_p) * Xt ** 2


def run_sinkhorn_demo(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    m, n, T = p["m"], p["n"], p["T"]
    gamma = m / n
    u_spec = NonlinearitySpec([tanh_latest()])
    init = InitLaw()
    se = None
    if T > 0:
        se = se_whitenoise(SEModel(init, u_spec, T, v_spec=u_spec, gamma=gamma, N=p["se_samples"],
                                   seed=_se_seed(cfg)))

    def one(trial):
        t0 = time.perf_counter()
        rng = make_rng(cfg.seed, trial, STREAM_MATRIX)
        E, V = heteroskedastic_noise(p["profile"], m, n, rng, p["missing_p"])
        d1, d2, S = sinkhorn_scale(V, tol=p["sinkhorn_tol"])
        W = np.sqrt(d1)[:, None] * E * np.sqrt(d2)[None, :] / math.sqrt(n)
        row_err = float(np.max(np.abs(S.sum(axis=1) - n)))
        col_err = float(np.max(np.abs(S.sum(axis=0) - m)))
        k = min(m, n)
        ev = np.sort(np.linalg.svd(W, compute_uv=False) ** 2)[::-1][:k][::-1]
        q = mp_quantiles((np.arange(1, k + 1) - 0.5) / k, gamma if gamma <= 1 else 1 / gamma)
        scale = 1.0 if gamma <= 1 else gamma
        spec_w2 = float(np.sqrt(np.mean((ev - scale * q) ** 2)))
        out = {"row_err": row_err, "col_err": col_err, "spectrum_w2": spec_w2}
        if T > 0:
            r = make_rng(cfg.seed, trial, STREAM_INIT)
            traj = amp_run_rect(AmpConfig(DenseOperator(W), r.standard_normal(m), u_spec, T, v_spec=u_spec))
            out["z_sq"] = np.mean(traj.z ** 2, 0).tolist()
            out["y_sq"] = np.mean(traj.y ** 2, 0).tolist()
        return out, (d1, d2), time.perf_counter() - t0

    res = map_trials(one, range(cfg.trials))
    files, timing = {}, {}
    rows = []
    for i, (out, _, secs) in enumerate(res):
        timing[_trial_name(i)] = secs
        rows.append([i, out["row_err"], out["col_err"], out["spectrum_w2"]])
    files["trials.csv"] = format_csv(["trial", "row_sum_err", "col_sum_err", "spectrum_w2"], rows)
    if res:
        d1, d2 = res[0][1]
        files["scaling_trial_0000.csv"] = format_csv(
            ["side", "index", "scale"], [["row", i, v] for i, v in enumerate(d1)] +
            [["col", j, v] for j, v in enumerate(d2)])
    sums_ok = all(o["row_err"] <= p["sinkhorn_tol"] * 10 and o["col_err"] <= p["sinkhorn_tol"] * 10
                  for o, _, _ in res)
    summary = {"experiment": cfg.kind, "gamma": gamma, "trials": [o for o, _, _ in res], "sums_ok": sums_ok}
    ok = sums_ok
    if T > 0 and res:
        mz = pooled_rel_err([o["z_sq"] for o, _, _ in res], np.diag(se.Omega))
        my = pooled_rel_err([o["y_sq"] for o, _, _ in res], np.diag(se.Sigma))
        amp_ok = bool(np.all(mz <= p["tolerance"]) and np.all(my <= p["tolerance"]))
        summary.update(z_rel_err=mz.tolist(), y_rel_err=my.tolist(), amp_ok=amp_ok)
        ok = ok and amp_ok
    summary["ok"] = bool(ok)
    return ExperimentResult(summary, bool(ok), files, {"timing": timing})


# ---------------------------------------------------------------- driver

RUNNERS = {
    "se_check": run_se_check,
    "universality_sym": run_universality_sym,
    "universality_rect": run_universality_rect,
    "tn_universality": run_tn_universality,
    "limval_audit": run_limval_audit,
    "sbm_z2sync": run_sbm_z2sync,
    "cs_phase_diagram": run_cs_phase_diagram,
    "sinkhorn_demo": run_sinkhorn_demo,
}


def run_experiment(cfg: ExperimentConfig, out_dir) -> ExperimentResult:
    """Run ``cfg`` and write its artifact set to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    result = RUNNERS[cfg.kind](cfg)
    elapsed = time.perf_counter() - t0
    files = dict(result.files)
    files["summary.json"] = dumps_json(result.summary)
    for rel, text in sorted(files.items()):
        path = out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    timing = {"total_seconds": elapsed, "threads": thread_count(), "per_trial": result.seeds.get("timing", {})}
    (out / "timing.json").write_text(dumps_json(timing))
    manifest = {
        "config": cfg.to_dict(),
        "library": {"name": "amplab", "version": __version__},
        "rng": {"generator": GENERATOR_NAME, "splitting_rule": SPLITTING_RULE,
                "master_seed": cfg.seed, "trials": cfg.trials,
                "streams": {"matrix": STREAM_MATRIX, "init": STREAM_INIT, "signal": STREAM_SIGNAL,
                            "state_evolution": STREAM_SE}},
        "ok": result.ok,
        "files": [{"path": rel, "sha256": sha256_file(out / rel)} for rel in sorted(files)] +
                 [{"path": name, "sha256": None, "volatile": True} for name in VOLATILE_FILES],
    }
    (out / "manifest.json").write_text(dumps_json(manifest))
    return result
