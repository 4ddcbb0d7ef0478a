"""Closed-form limit values of tree tensor networks.

``limval_wigner_sym`` and ``limval_wigner_rect`` sum over vertex partitions
whose quotient multigraph is a doubled tree.  ``limval_invariant_sym`` uses
the vertex-edge pair frame of a tree and sums over geodesic chains of
pairings; it can also be assembled from the pairing Moebius function, and
both routes agree exactly when the moments are exact rationals.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from ..polynomial import MultiPoly
from ..tensornet import AlternatingTensorNetwork, DiagonalTensorNetwork, tn_validate
from .partitions import (
    Partition,
    enumerate_partitions,
    moeb_pairings,
    pairings,
    partition_join,
    partition_metric,
)

WIGNER_VERTEX_CAP = 8
INVARIANT_EDGE_CAP = 5


class CapExceeded(ValueError):
    pass


@dataclass
class LimitResult:
    value: object
    terms: list = field(default_factory=list)
    note: str = ""

    def __float__(self):
        return float(self.value)

    def to_dict(self) -> dict:
        return {"value": float(self.value), "note": self.note, "terms": self.terms}


def _check_tree(T):
    rep = tn_validate(T)
    if not rep.ok:
        raise ValueError("; ".join(rep.messages))


def _product_label(labels, members, k) -> MultiPoly:
    out = MultiPoly.constant(1.0, k)
    for v in members:
        out = out * labels[v]
    return out


def _expect(poly: MultiPoly, mom):
    # keep exact arithmetic when the oracle returns rationals or ints
    acc = 0
    for exps, c in poly.terms:
        cc = int(c) if float(c).is_integer() else c
        acc = acc + cc * mom(exps)
    return acc


def _is_doubled_tree(nblocks: int, qedges: list, n_edges: int) -> bool:
    """Quotient edges (pairs of block ids) form a doubled tree with
    ``n_edges/2 + 1`` vertices."""
    if n_edges % 2 or nblocks != n_edges // 2 + 1:
        return False
    counts: dict = {}
    for a, b in qedges:
        if a == b:
            return False
        key = (a, b) if a < b else (b, a)
        counts[key] = counts.get(key, 0) + 1
    if any(c != 2 for c in counts.values()) or len(counts) != nblocks - 1:
        return False
    # connected check (|unique| = blocks - 1 plus connected => tree)
    adj = {i: [] for i in range(nblocks)}
    for a, b in counts:
        adj[a].append(b)
        adj[b].append(a)
    seen, stack = {0}, [0]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == nblocks


def limval_wigner_sym(T: DiagonalTensorNetwork, momX, cap: int = WIGNER_VERTEX_CAP) -> LimitResult:
    """Limit value for generalized Wigner matrices.

    Sums ``prod_U E[Q_U(X)]`` over vertex partitions whose quotient
    multigraph is a doubled tree with ``|E|/2 + 1`` vertices.
    """
    _check_tree(T)
    nv, w = T.n_vertices, T.n_edges
    if w % 2:
        return LimitResult(0, [], "odd-edge parity: no admissible partition")
    if nv > cap:
        raise CapExceeded(f"{nv} vertices exceeds the enumeration cap {cap}")
    total = 0
    terms = []
    for P in enumerate_partitions(nv):
        lab = P.labels
        qedges = [(lab[a], lab[b]) for a, b in T.edges]
        if not _is_doubled_tree(len(P), qedges, w):
            continue
        val = 1
        for blk in P.blocks:
            val = val * _expect(_product_label(T.labels, blk, T.k), momX)
        total = total + val
        terms.append({"partition": P.to_list(), "value": float(val)})
    return LimitResult(total, terms)


def limval_wigner_rect(T: AlternatingTensorNetwork, gamma: float, momX, momY,
                       cap: int = WIGNER_VERTEX_CAP) -> LimitResult:
    """Limit value for generalized white-noise matrices with ``m/n -> gamma``.

    Each admissible pair of partitions (U-side, V-side) contributes
    ``gamma^{|U_G|} prod_U E[P_U(X)] prod_V E[Q_V(Y)]``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    _check_tree(T)
    w = T.n_edges
    if w % 2:
        return LimitResult(0, [], "odd-edge parity: no admissible partition")
    if T.n_vertices > cap:
        raise CapExceeded(f"{T.n_vertices} vertices exceeds the enumeration cap {cap}")
    Us, Vs = T.side_vertices("U"), T.side_vertices("V")
    total = 0
    terms = []
    for PU, PV in product(list(enumerate_partitions(len(Us))), list(enumerate_partitions(len(Vs)))):
        block = {}
        for i, u in enumerate(Us):
            block[u] = PU.labels[i]
        for i, v in enumerate(Vs):
            block[v] = len(PU) + PV.labels[i]
        qedges = [(block[a], block[b]) for a, b in T.edges]
        if not _is_doubled_tree(len(PU) + len(PV), qedges, w):
            continue
        val = gamma ** len(PU)
        for blk in PU.blocks:
            val = val * _expect(_product_label(T.labels, [Us[i] for i in blk], T.k), momX)
        for blk in PV.blocks:
            val = val * _expect(_product_label(T.labels, [Vs[i] for i in blk], T.l), momY)
        total = total + val
        terms.append({"U": [[Us[i] for i in b] for b in PU.blocks],
                      "V": [[Vs[i] for i in b] for b in PV.blocks], "value": float(val)})
    return LimitResult(total, terms)


# ---------------------------------------------------------------- invariant


@dataclass
class PairFrame:
    """Vertex-edge incidences of a tree: pair ``2e`` is (first endpoint of
    edge ``e``, ``e``) and pair ``2e + 1`` is (second endpoint, ``e``)."""

    pair_vertex: tuple
    pair_edge: tuple
    pi_V: Partition
    pi_E: Partition

    @property
    def w(self) -> int:
        return len(self.pair_edge) // 2

    @classmethod
    def from_tree(cls, T) -> "PairFrame":
        _check_tree(T)
        pv, pe = [], []
        for e, (a, b) in enumerate(T.edges):
            pv += [a, b]
            pe += [e, e]
        pi_V = Partition.from_labels(pv)
        pi_E = Partition.from_labels(pe)
        return cls(tuple(pv), tuple(pe), pi_V, pi_E)

    def q(self, pi: Partition, labels, k, momX):
        """``prod_S E[prod over distinct vertices of S of q_v(X)]``."""
        val = 1
        for S in pi.blocks:
            verts = sorted({self.pair_vertex[r] for r in S})
            val = val * _expect(_product_label(labels, verts, k), momX)
        return val

    def D(self, pi: Partition, momD):
        """``prod_S E[D^(number of distinct edges in S)]``."""
        val = 1
        for S in pi.blocks:
            val = val * momD((len({self.pair_edge[r] for r in S}),))
        return val


def _invariant_setup(T, cap):
    _check_tree(T)
    if T.n_edges == 0:
        return None
    if T.n_edges > cap:
        raise CapExceeded(f"{T.n_edges} edges exceeds the pairing cap {cap}")
    return PairFrame.from_tree(T)


def limval_invariant_sym(T: DiagonalTensorNetwork, momX, momD, route: str = "chains",
                         cap: int = INVARIANT_EDGE_CAP) -> LimitResult:
    """Limit value for symmetric generalized invariant matrices.

    ``route="chains"`` sums ``(-1)^j q(pi_V v pi_0) D(pi_E v pi_j)`` over
    geodesics ``pi_V -> pi_0 -> ... -> pi_j -> pi_E`` of distinct pairings;
    the last pairing may coincide with ``pi_E``.  ``route="moebius"`` sums
    ``Moeb(pi, pi') q(pi_V v pi) D(pi_E v pi')`` over pairs with
    ``pi_V -> pi -> pi' -> pi_E`` geodesic.
    """
    frame = _invariant_setup(T, cap)
    if frame is None:  # a single vertex: the value is E[q(X)]
        return LimitResult(_expect(T.labels[0], momX), [], "no edges")
    P = pairings(2 * frame.w)
    target = 2 * frame.w - 1
    piV, piE = frame.pi_V, frame.pi_E
    dV = {p: partition_metric(piV, p) for p in P}
    dE = {p: partition_metric(p, piE) for p in P}
    qcache: dict = {}
    Dcache: dict = {}

    def qv(p):
        if p not in qcache:
            qcache[p] = frame.q(partition_join(piV, p), T.labels, T.k, momX)
        return qcache[p]

    def dv(p):
        if p not in Dcache:
            Dcache[p] = frame.D(partition_join(piE, p), momD)
        return Dcache[p]

    total = 0
    terms = []
    if route == "chains":
        starts = [p for p in P if dV[p] + dE[p] == target]

        def extend(chain, used):
            nonlocal total
            last = chain[-1]
            if used + dE[last] == target:
                j = len(chain) - 1
                val = (-1) ** j * qv(chain[0]) * dv(last)
                if val != 0:
                    total = total + val
                    terms.append({"chain": [c.to_list() for c in chain], "value": float(val)})
            for c in P:
                if c == last:
                    continue
                step = partition_metric(last, c)
                if used + step + dE[c] == target:
                    chain.append(c)
                    extend(chain, used + step)
                    chain.pop()

        for s in starts:
            extend([s], dV[s])
    elif route == "moebius":
        for p in P:
            if dV[p] + dE[p] > target:
                continue
            for p2 in P:
                if dV[p] + partition_metric(p, p2) + dE[p2] != target:
                    continue
                val = moeb_pairings(p, p2) * qv(p) * dv(p2)
                if val != 0:
                    total = total + val
                    terms.append({"pi": p.to_list(), "pi_prime": p2.to_list(), "value": float(val)})
    else:
        raise ValueError(f"unknown route {route!r}")
    return LimitResult(total, terms)

