"""Limits of normalized orthogonal-matrix graph sums.

For a connected bipartite multigraph ``G`` on vertex classes ``K`` and ``L``
with ``2w`` edges and all degrees even,

    H_n(G) = sum over k in [n]^K, l in [n]^L of prod_{(a, b) in E} H[k_a, l_b]

satisfies ``H_n(G)/n -> 0 or 1`` for delocalized orthogonal ``H``.  The limit
is computed by the degree-2 reduction; the numeric value is computed by
variable elimination for validation.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np


class HGraphError(ValueError):
    pass


@dataclass(frozen=True)
class BipartiteMultigraph:
    """``edges`` is a tuple of ``(a, b)`` with ``a`` in ``range(nK)`` and
    ``b`` in ``range(nL)``; repeated pairs are parallel edges."""

    nK: int
    nL: int
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(sorted((int(a), int(b)) for a, b in self.edges)))

    def degrees(self):
        dk = Counter(a for a, _ in self.edges)
        dl = Counter(b for _, b in self.edges)
        return [dk.get(a, 0) for a in range(self.nK)], [dl.get(b, 0) for b in range(self.nL)]

    def is_connected(self) -> bool:
        if self.nK + self.nL == 0:
            return False
        adj = {("K", a): set() for a in range(self.nK)}
        adj.update({("L", b): set() for b in range(self.nL)})
        for a, b in self.edges:
            adj[("K", a)].add(("L", b))
            adj[("L", b)].add(("K", a))
        start = next(iter(adj))
        seen, stack = {start}, [start]
        while stack:
            v = stack.pop()
            for u in adj[v] - seen:
                seen.add(u)
                stack.append(u)
        return len(seen) == len(adj)

    def validate(self):
        for a, b in self.edges:
            if not (0 <= a < self.nK and 0 <= b < self.nL):
                raise HGraphError(f"edge ({a}, {b}) out of range")
        dk, dl = self.degrees()
        if any(d % 2 for d in dk + dl) or any(d == 0 for d in dk + dl):
            raise HGraphError("every vertex must have positive even degree")
        if not self.is_connected():
            raise HGraphError("graph must be connected")


def _relabel(nK, nL, edges):
    ks = sorted({a for a, _ in edges})
    ls = sorted({b for _, b in edges})
    mk = {a: i for i, a in enumerate(ks)}
    ml = {b: i for i, b in enumerate(ls)}
    return BipartiteMultigraph(len(ks), len(ls), tuple((mk[a], ml[b]) for a, b in edges))


def _reduce_once(G: BipartiteMultigraph) -> BipartiteMultigraph:
    """Remove a degree-2 vertex and its edges, merging its two neighbours."""
    dk, dl = G.degrees()
    for a, d in enumerate(dk):
        if d == 2:
            nbrs = [b for x, b in G.edges if x == a]
            keep = [(x, b) for x, b in G.edges if x != a]
            b1, b2 = nbrs
            if b1 != b2:
                keep = [(x, b1 if b == b2 else b) for x, b in keep]
            return _relabel(G.nK, G.nL, keep)
    for b, d in enumerate(dl):
        if d == 2:
            nbrs = [a for a, y in G.edges if y == b]
            keep = [(a, y) for a, y in G.edges if y != b]
            a1, a2 = nbrs
            if a1 != a2:
                keep = [(a1 if a == a2 else a, y) for a, y in keep]
            return _relabel(G.nK, G.nL, keep)
    raise AssertionError("no degree-2 vertex although |K| + |L| > w")


def hgraph_limit(G: BipartiteMultigraph, trace: list | None = None) -> int:
    """Limit of ``H_n(G)/n`` by the inductive degree-2 reduction.

    If ``trace`` is a list, the sequence of visited graphs is appended to it.
    """
    G.validate()
    while True:
        if trace is not None:
            trace.append(G)
        w = len(G.edges) // 2
        if w == 1:
            return 1
        if G.nK + G.nL <= w:
            return 0
        G = _reduce_once(G)


def hgraph_numeric(G: BipartiteMultigraph, H: np.ndarray, max_factor_vars: int = 2) -> float:
    """``H_n(G)/n`` by variable elimination.

    Parallel edges become entrywise powers of ``H``.  Each step sums out the
    vertex with the fewest neighbours among the current factors, provided
    the resulting factor has at most ``max_factor_vars`` variables, so with
    the default every intermediate is a vector or a matrix.
    """
    G.validate()
    n = H.shape[0]
    factors: list = [((("K", a), ("L", b)), H ** mult) for (a, b), mult in sorted(Counter(G.edges).items())]
    variables = sorted({("K", a) for a in range(G.nK)} | {("L", b) for b in range(G.nL)})
    scalar = 1.0
    letters = "abcdefghijklmnopqrstuvwxyz"
    while variables:
        best = None
        for v in variables:
            nbrs = sorted({u for vs, _ in factors if v in vs for u in vs if u != v})
            if len(nbrs) <= max_factor_vars and (best is None or len(nbrs) < len(best[1])):
                best = (v, nbrs)
        if best is None:
            raise HGraphError(f"elimination would need a factor with more than {max_factor_vars} variables")
        v, nbrs = best
        touching = [(vs, f) for vs, f in factors if v in vs]
        factors = [(vs, f) for vs, f in factors if v not in vs]
        names = {u: letters[i] for i, u in enumerate([v] + nbrs)}
        subs = ",".join("".join(names[u] for u in vs) for vs, _ in touching)
        out = "".join(names[u] for u in nbrs)
        if touching:
            new = np.einsum(f"{subs}->{out}", *[f for _, f in touching], optimize=True)
        else:
            new = np.full((), float(n))
        if nbrs:
            factors.append((tuple(nbrs), new))
        else:
            scalar *= float(new)
        variables.remove(v)
    return scalar / n
