"""Run one experiment config and print its summary.

    python3 scripts/run_config.py configs/se_check.json --out runs/se_check
"""
import argparse
import sys
import time

from amplab.config import load_config
from amplab.experiments import run_experiment
from amplab.io import dumps_json


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--out", default=None, help="artifact directory (default runs/<name>)")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--trials", type=int, default=None)
    args = ap.parse_args(argv)
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trials is not None:
        cfg.trials = args.trials
    out = args.out or f"runs/{cfg.name}"
    t0 = time.perf_counter()
    res = run_experiment(cfg, out)
    sys.stdout.write(dumps_json(res.summary))
    sys.stdout.write(f"# ok={res.ok}  {time.perf_counter() - t0:.1f} s  artifacts in {out}\n")
    return 0 if res.ok else 1


if __name__ == "__main__":
    sys.exit(main())
