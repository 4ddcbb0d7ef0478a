"""Print success rates of compressed-sensing AMP for Gaussian and subsampled
Hadamard sensing matrices along rho / rho_DT, one table per undersampling
ratio.

    python3 scripts/cs_phase_table.py --n 1024 --trials 10
"""
import argparse
import sys
import tempfile

from amplab.config import load_config
from amplab.experiments import run_experiment


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/cs_phase_diagram.json")
    ap.add_argument("--n", type=int, default=None)
    ap.add_argument("--trials", type=int, default=None)
    args = ap.parse_args(argv)
    cfg = load_config(args.config)
    if args.n is not None:
        cfg.params["n"] = args.n
    if args.trials is not None:
        cfg.trials = args.trials
    with tempfile.TemporaryDirectory() as out:
        res = run_experiment(cfg, out)
    ens = cfg.params["ensembles"]
    rel = cfg.params["rho_relative"]
    for delta, d in res.summary["deltas"].items():
        print(f"\ndelta = {delta}  (m = {d['m']}, rho_DT = {d['rho_dt']:.4f})")
        print("rho/rho_DT  " + "  ".join(f"{k:>9s}" for k in ens) + "  boundary")
        for i, r in enumerate(rel):
            rates = "  ".join(f"{d['success'][k][i]:9.2f}" for k in ens)
            print(f"{r:10.2f}  {rates}  {'*' if d['boundary'][i] else ''}")
        print(f"max off-boundary difference {d['max_offboundary_difference']:.2f}  pass={d['pass']}")
    return 0 if res.ok else 1


if __name__ == "__main__":
    sys.exit(main())
