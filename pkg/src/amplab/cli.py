"""Command line interface: ``amplab <subcommand>``.

Every subcommand accepts ``--config``, ``--seed``, ``--out`` and
``--format``.  Results go to ``--out`` (a directory) when given and to
standard output otherwise.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .amp import AmpConfig, amp_run_rect, amp_run_sym
from .combinat import (IndependentMoments, SpectralMoments, limval_invariant_sym, limval_wigner_rect,
                       limval_wigner_sym)
from .config import (AMP_DEFAULTS, AMP_SCHEMA, SE_DEFAULTS, SE_SCHEMA, ConfigError, ExperimentConfig,
                     load_config, validate_with_defaults)
from .ensembles import RECT_KINDS, SYM_KINDS, RectEnsembleSpec, SymEnsembleSpec, sample_rectangular, sample_symmetric
from .fastops import materialize_dense
from .io import dumps_json, format_csv
from .nonlinear import spec_from_config
from .rng import STREAM_INIT, STREAM_MATRIX, STREAM_SIGNAL, derive_seed, make_rng
from .spectral import SpectralSpec
from .stateevo import InitLaw, SEModel, se_goe, se_whitenoise
from .tensornet import AlternatingTensorNetwork, network_from_dict, tn_eval, tn_eval_alt


def _read_json(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError([f"{path}: not valid JSON: {e}"]) from None
    except OSError as e:
        raise ConfigError([f"{path}: {e.strerror}"]) from None


def _emit(args, name: str, text: str):
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    else:
        sys.stdout.write(text)


def _kind(name: str) -> str:
    for k in SYM_KINDS + RECT_KINDS:
        if k.lower() == name.lower():
            return k
    raise ConfigError([f"unknown ensemble kind {name!r}; choose from {SYM_KINDS + RECT_KINDS}"])


# ---------------------------------------------------------------- subcommands


def cmd_sample(args) -> int:
    spec_doc = _read_json(args.config)
    if args.kind:
        spec_doc["kind"] = _kind(args.kind)
    spec_doc.setdefault("kind", "GOE")
    n = args.n
    if spec_doc["kind"] in SYM_KINDS:
        op = sample_symmetric(SymEnsembleSpec.from_dict(spec_doc), n, args.seed)
    else:
        m = args.m or n
        if spec_doc["kind"] == "RectInvariant" and "singular_value_law" not in spec_doc:
            spec_doc["singular_value_law"] = {"kind": "marchenko_pastur", "params": {"gamma": m / n}}
        op = sample_rectangular(RectEnsembleSpec.from_dict(spec_doc), m, n, args.seed)
    A = materialize_dense(op)
    if args.format == "json":
        _emit(args, "matrix.json", dumps_json({"shape": list(A.shape), "provenance": op.provenance, "data": A}))
    else:
        _emit(args, "matrix.csv", format_csv([f"c{j}" for j in range(A.shape[1])], A))
    return 0


def _se_from_doc(doc, seed):
    init = InitLaw.from_dict(doc["init"])
    u_spec = spec_from_config(doc["nonlinearity"])
    if doc["kind"] == "goe":
        return se_goe(SEModel(init, u_spec, doc["T"], N=doc["N"], seed=seed, deriv_mode=doc["deriv_mode"]))
    v_spec = spec_from_config(doc["v_nonlinearity"])
    return se_whitenoise(SEModel(init, u_spec, doc["T"], v_spec=v_spec, gamma=doc["gamma"], N=doc["N"],
                                 seed=seed, deriv_mode=doc["deriv_mode"]))


def cmd_se_predict(args) -> int:
    doc = validate_with_defaults(_read_json(args.config), SE_SCHEMA, SE_DEFAULTS)
    res = _se_from_doc(doc, args.seed)
    if args.format == "csv":
        T = res.T
        rows = [[t + 1, s + 1, res.Sigma[t, s], res.Sigma_se[t, s], res.b[t, s], res.b_se[t, s]]
                for t in range(T) for s in range(T)]
        _emit(args, "se.csv", format_csv(["t", "s", "Sigma", "Sigma_se", "b", "b_se"], rows))
    else:
        _emit(args, "se.json", res.to_json() + "\n")
    return 0


def cmd_amp_run(args) -> int:
    doc = validate_with_defaults(_read_json(args.config), AMP_SCHEMA, AMP_DEFAULTS)
    n, T = doc["n"], doc["T"]
    init = InitLaw.from_dict(doc["init"])
    u_spec = spec_from_config(doc["nonlinearity"])
    kind = doc["ensemble"]["kind"]
    rng = make_rng(args.seed, 0, STREAM_INIT)
    mseed = derive_seed(args.seed, 0, STREAM_MATRIX)
    se = None
    if kind in SYM_KINDS:
        if doc["coef_mode"] == "prescribed":
            se = se_goe(SEModel(init, u_spec, T, N=doc["se_samples"], seed=args.seed))
        op = sample_symmetric(SymEnsembleSpec.from_dict(doc["ensemble"]), n, mseed)
        u1, F = init.sample_u(n, rng)
        traj = amp_run_sym(AmpConfig(op, u1, u_spec, T, F=F, mode=doc["coef_mode"], se=se,
                                     deriv_mode=doc["deriv_mode"]))
    else:
        m = doc.get("m", n)
        v_spec = spec_from_config(doc["v_nonlinearity"])
        if doc["coef_mode"] == "prescribed":
            se = se_whitenoise(SEModel(init, u_spec, T, v_spec=v_spec, gamma=m / n, N=doc["se_samples"],
                                       seed=args.seed))
        ens = dict(doc["ensemble"])
        if kind == "RectInvariant" and "singular_value_law" not in ens:
            ens["singular_value_law"] = {"kind": "marchenko_pastur", "params": {"gamma": m / n}}
        op = sample_rectangular(RectEnsembleSpec.from_dict(ens), m, n, mseed)
        u1, F = init.sample_u(m, rng)
        G = init.sample_g(n, rng)
        traj = amp_run_rect(AmpConfig(op, u1, u_spec, T, F=F, v_spec=v_spec, G=G, mode=doc["coef_mode"],
                                      se=se, deriv_mode=doc["deriv_mode"]))
    if args.format == "json":
        s = traj.summary()
        s.pop("seconds")
        _emit(args, "trajectory.json", dumps_json(s))
    else:
        labels, X = traj.rows()
        thin = max(1, args.thin)
        rows = [[i, lab, X[i, j]] for j, lab in enumerate(labels) for i in range(0, X.shape[0], thin)]
        _emit(args, "trajectory.csv", format_csv(["coordinate", "column", "value"], rows))
    return 0


def _load_network(args):
    doc = _read_json(args.network or args.config)
    if not doc:
        raise ConfigError(["a network JSON is required (--network or --config)"])
    return network_from_dict(doc)


def cmd_tn_eval(args) -> int:
    net = _load_network(args)
    n = args.n
    rng = make_rng(args.seed, 0, STREAM_SIGNAL)
    if isinstance(net, AlternatingTensorNetwork):
        m = args.m or n
        op = sample_rectangular(RectEnsembleSpec("GaussianWhiteNoise"), m, n, derive_seed(args.seed, 0, STREAM_MATRIX))
        val = tn_eval_alt(net, op, rng.standard_normal((m, net.k)), rng.standard_normal((n, net.l)))
    else:
        kind = _kind(args.kind or "GOE")
        spec = SymEnsembleSpec(kind) if kind != "SymInvariant" else \
            SymEnsembleSpec(kind, eigenvalue_law=SpectralSpec.semicircle())
        op = sample_symmetric(spec, n, derive_seed(args.seed, 0, STREAM_MATRIX))
        val = tn_eval(net, op, rng.standard_normal((n, net.k)))
    if args.format == "csv":
        _emit(args, "tn_eval.csv", format_csv(["value"], [[val]]))
    else:
        _emit(args, "tn_eval.json", dumps_json({"value": val, "n": n, "seed": args.seed}))
    return 0


def cmd_tn_limit(args) -> int:
    net = _load_network(args)
    if isinstance(net, AlternatingTensorNetwork):
        res = limval_wigner_rect(net, args.gamma, IndependentMoments(["normal"] * net.k),
                                 IndependentMoments(["normal"] * net.l))
    else:
        momX = IndependentMoments(["normal"] * net.k)
        if args.ensemble == "invariant":
            res = limval_invariant_sym(net, momX, SpectralMoments(SpectralSpec.semicircle()))
        else:
            res = limval_wigner_sym(net, momX)
    if args.format == "csv":
        _emit(args, "tn_limit.csv", format_csv(["value", "note"], [[float(res.value), res.note]]))
    else:
        _emit(args, "tn_limit.json", dumps_json({"value": float(res.value), "note": res.note}))
    return 0


def cmd_experiment(args) -> int:
    from .experiments import run_experiment

    cfg = load_config(args.config) if args.config else ExperimentConfig.from_dict({"kind": "se_check"})
    if args.seed_given:
        cfg.seed = args.seed
    out = args.out or f"runs/{cfg.name or cfg.kind}"
    res = run_experiment(cfg, out)
    sys.stdout.write(dumps_json({"ok": res.ok, "out": str(out)}))
    return 0 if res.ok else 1


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="amplab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, default_format="json"):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (default 0)")
        p.add_argument("--out", help="output directory (default: standard output)")
        p.add_argument("--format", choices=("csv", "json"), default=default_format)
        return p

    p = common(sub.add_parser("sample", help="draw a matrix from an ensemble"), "csv")
    p.add_argument("--kind", help="ensemble kind, e.g. goe or SymInvariant")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m", type=int, default=None)
    p.set_defaults(func=cmd_sample)

    p = common(sub.add_parser("se-predict", help="run the state-evolution recursion"))
    p.set_defaults(func=cmd_se_predict)

    p = common(sub.add_parser("amp-run", help="run one AMP trajectory"))
    p.add_argument("--thin", type=int, default=1, help="keep every k-th coordinate in CSV output")
    p.set_defaults(func=cmd_amp_run)

    p = common(sub.add_parser("tn-eval", help="evaluate a tensor network on a sampled matrix"))
    p.add_argument("--network", help="network JSON (alias of --config)")
    p.add_argument("--kind", help="symmetric ensemble kind")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--m", type=int, default=None)
    p.set_defaults(func=cmd_tn_eval)

    p = common(sub.add_parser("tn-limit", help="closed-form limit value of a tensor network"))
    p.add_argument("--network", help="network JSON (alias of --config)")
    p.add_argument("--ensemble", choices=("wigner", "invariant"), default="wigner")
    p.add_argument("--gamma", type=float, default=1.0, help="m/n for alternating networks")
    p.set_defaults(func=cmd_tn_limit)

    p = common(sub.add_parser("experiment", help="run a batch experiment from a config"))
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    if not 0 <= args.seed < 2 ** 64:
        ap.error("--seed must be an unsigned 64-bit integer")
    try:
        return args.func(args)
    except ConfigError as e:
        sys.stderr.write(str(e) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
