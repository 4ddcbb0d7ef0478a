"""Compare Monte Carlo tensor-network values with their closed-form limits
for every tree with at most ``--w`` edges.

    python3 scripts/tree_limits_table.py --n 1000 --seeds 50
"""
import argparse
import math
import sys

import numpy as np

from amplab.combinat import IndependentMoments
from amplab.ensembles import SymEnsembleSpec, sample_symmetric
from amplab.experiments import network_limit
from amplab.polynomial import MultiPoly
from amplab.rng import STREAM_MATRIX, STREAM_SIGNAL, derive_seed, make_rng
from amplab.spectral import SpectralSpec
from amplab.tensornet import DiagonalTensorNetwork, tn_eval, trees_up_to

LABELS = [MultiPoly.monomial([2]), MultiPoly.variable(0, 1), MultiPoly(1, [((0,), 1.0), ((1,), 1.0)]),
          MultiPoly(1, [((2,), 1.0), ((0,), -1.0)])]
ENSEMBLES = {
    "goe": SymEnsembleSpec("GOE"),
    "rademacher": SymEnsembleSpec("GeneralizedWigner", entry_law="rademacher"),
    "hadamard_semicircle": SymEnsembleSpec("SymInvariant", eigenvalue_law=SpectralSpec.semicircle(),
                                           basis="hadamard"),
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ensemble", choices=sorted(ENSEMBLES), default="goe")
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--w", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    spec = ENSEMBLES[args.ensemble]
    nets = [DiagonalTensorNetwork([LABELS[v % len(LABELS)] for v in range(len(e) + 1)], e)
            for e in trees_up_to(args.w)]
    vals = np.zeros((len(nets), args.seeds))
    for s in range(args.seeds):
        op = sample_symmetric(spec, args.n, derive_seed(args.seed, s, STREAM_MATRIX))
        x = make_rng(args.seed, s, STREAM_SIGNAL).standard_normal(args.n)
        for j, net in enumerate(nets):
            vals[j, s] = tn_eval(net, op, x)
    momX = IndependentMoments(["normal"])
    print(f"{'edges':40s} {'limit':>9s} {'mc mean':>9s} {'s.e.':>8s} {'z':>6s}")
    for j, net in enumerate(nets):
        lim = float(network_limit(net, spec, momX).value)
        se = vals[j].std(ddof=1) / math.sqrt(args.seeds)
        z = (vals[j].mean() - lim) / se if se > 0 else 0.0
        print(f"{str(net.edges):40s} {lim:9.4f} {vals[j].mean():9.4f} {se:8.4f} {z:6.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
