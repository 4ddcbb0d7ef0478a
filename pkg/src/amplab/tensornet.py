"""Diagonal tensor networks on trees and their normalized values.

A diagonal tensor network is a tree whose vertices carry polynomial labels.
Its value on a symmetric ``n x n`` matrix ``W`` with inputs ``x`` (an
``n x k`` array) is

    (1/n) sum over index maps i: V -> [n] of
        prod_v q_v(x[i_v]) * prod_{(u,v) in E} W[i_u, i_v]

and is computed by contracting the tree toward a root, one matvec per edge.
The alternating variant lives on a bipartite tree: U-vertices index rows of
an ``m x n`` matrix, V-vertices index columns, and the value is still
normalized by ``1/n``.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fastops import DenseOperator, MatrixOperator, apply_operator
from .polynomial import MultiPoly

DEFAULT_BRUTE_CAP = 10_000_000


class TreeError(ValueError):
    pass


@dataclass
class TNReport:
    ok: bool
    messages: list = field(default_factory=list)


# ---------------------------------------------------------------- networks


@dataclass
class DiagonalTensorNetwork:
    labels: list
    edges: list
    k: int = 1

    def __post_init__(self):
        self.edges = [tuple(int(a) for a in e) for e in self.edges]

    @property
    def n_vertices(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def to_dict(self) -> dict:
        return {
            "type": "diagonal",
            "k": self.k,
            "vertices": [{"label": q.to_list()} for q in self.labels],
            "edges": [list(e) for e in self.edges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DiagonalTensorNetwork":
        k = int(d.get("k", 1))
        labels = [MultiPoly.from_list(k, v["label"]) for v in d["vertices"]]
        return cls(labels, d["edges"], k)

    @classmethod
    def uniform(cls, edges, n_vertices: int, label: Optional[MultiPoly] = None, k: int = 1):
        label = label if label is not None else MultiPoly.constant(1.0, k)
        return cls([label] * n_vertices, edges, k)


@dataclass
class AlternatingTensorNetwork:
    """``sides[v]`` is ``"U"`` (m-side, label in ``k`` variables) or ``"V"``
    (n-side, label in ``l`` variables)."""

    sides: list
    labels: list
    edges: list
    k: int = 1
    l: int = 1

    def __post_init__(self):
        self.edges = [tuple(int(a) for a in e) for e in self.edges]
        self.sides = [str(s) for s in self.sides]

    @property
    def n_vertices(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def side_vertices(self, side: str) -> list:
        return [v for v, s in enumerate(self.sides) if s == side]

    def to_dict(self) -> dict:
        return {
            "type": "alternating",
            "k": self.k,
            "l": self.l,
            "vertices": [{"side": s, "label": q.to_list()} for s, q in zip(self.sides, self.labels)],
            "edges": [list(e) for e in self.edges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AlternatingTensorNetwork":
        k, l = int(d.get("k", 1)), int(d.get("l", 1))
        sides = [v["side"] for v in d["vertices"]]
        labels = [MultiPoly.from_list(k if s == "U" else l, v["label"]) for s, v in zip(sides, d["vertices"])]
        return cls(sides, labels, d["edges"], k, l)


def network_from_dict(d: dict):
    if d.get("type", "diagonal") == "alternating":
        return AlternatingTensorNetwork.from_dict(d)
    return DiagonalTensorNetwork.from_dict(d)


# ---------------------------------------------------------------- validation


def _tree_messages(nv: int, edges) -> list:
    msgs = []
    if nv == 0:
        return ["network has no vertices"]
    for a, b in edges:
        if not (0 <= a < nv and 0 <= b < nv):
            msgs.append(f"edge ({a}, {b}) references a missing vertex")
            return msgs
        if a == b:
            msgs.append(f"self-loop at vertex {a}")
    if len(edges) != nv - 1:
        msgs.append(f"not a tree: {len(edges)} edges on {nv} vertices")
    adj = [[] for _ in range(nv)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    if len(seen) != nv:
        msgs.append("not a tree: graph is disconnected")
    return msgs


def tn_validate(T) -> TNReport:
    """Report tree-ness, bipartiteness (alternating case) and label arity."""
    msgs = _tree_messages(T.n_vertices, T.edges)
    if isinstance(T, AlternatingTensorNetwork):
        if len(T.sides) != T.n_vertices:
            msgs.append("sides and labels differ in length")
        else:
            for v, s in enumerate(T.sides):
                if s not in ("U", "V"):
                    msgs.append(f"vertex {v} has unknown side {s!r}")
                want = T.k if s == "U" else T.l
                if T.labels[v].k != want:
                    msgs.append(f"vertex {v} label has {T.labels[v].k} variables, expected {want}")
            for a, b in T.edges:
                if 0 <= a < T.n_vertices and 0 <= b < T.n_vertices and T.sides[a] == T.sides[b]:
                    msgs.append(f"edge ({a}, {b}) joins two {T.sides[a]}-vertices")
    else:
        for v, q in enumerate(T.labels):
            if q.k != T.k:
                msgs.append(f"vertex {v} label has {q.k} variables, expected {T.k}")
    return TNReport(not msgs, msgs)


def _require_valid(T):
    rep = tn_validate(T)
    if not rep.ok:
        raise TreeError("; ".join(rep.messages))


# ---------------------------------------------------------------- contraction


def _adjacency(nv, edges):
    adj = [[] for _ in range(nv)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    return adj


def _postorder(adj, root):
    """(vertex, parent) pairs with every child listed before its parent."""
    order, stack, parent = [], [root], {root: -1}
    while stack:
        v = stack.pop()
        order.append(v)
        for w in adj[v]:
            if w != parent[v]:
                parent[w] = v
                stack.append(w)
    return [(v, parent[v]) for v in reversed(order)]


def default_root(nv, edges) -> int:
    deg = np.zeros(nv, dtype=int)
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    return int(np.argmax(deg))


def _as_inputs(x, k: int, dim: int) -> np.ndarray:
    if isinstance(x, (list, tuple)):
        x = np.column_stack([np.asarray(c, dtype=np.float64) for c in x]) if len(x) else np.zeros((dim, 0))
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape != (dim, k):
        raise ValueError(f"inputs must have shape ({dim}, {k}), got {x.shape}")
    return x


def _as_operator(W) -> MatrixOperator:
    return W if isinstance(W, MatrixOperator) else DenseOperator(W)


def tn_eval(T: DiagonalTensorNetwork, W, x, root: Optional[int] = None) -> float:
    """Value of ``T`` on symmetric ``W`` by rooted tree contraction."""
    _require_valid(T)
    W = _as_operator(W)
    n = W.shape[0]
    if W.shape != (n, n):
        raise ValueError("tn_eval needs a square operator")
    x = _as_inputs(x, T.k, n)
    root = default_root(T.n_vertices, T.edges) if root is None else root
    adj = _adjacency(T.n_vertices, T.edges)
    acc = {}
    for v, parent in _postorder(adj, root):
        vec = T.labels[v](x)
        if v in acc:
            vec = vec * acc.pop(v)
        if parent < 0:
            return math.fsum(vec) / n
        msg = apply_operator(W, vec)
        acc[parent] = acc[parent] * msg if parent in acc else msg
    raise AssertionError("unreachable")


def tn_eval_alt(T: AlternatingTensorNetwork, W, x, y, root: Optional[int] = None) -> float:
    """Value of an alternating network on ``m x n`` ``W`` (normalized by 1/n)."""
    _require_valid(T)
    W = _as_operator(W)
    m, n = W.shape
    x = _as_inputs(x, T.k, m)
    y = _as_inputs(y, T.l, n)
    root = default_root(T.n_vertices, T.edges) if root is None else root
    adj = _adjacency(T.n_vertices, T.edges)
    acc = {}
    for v, parent in _postorder(adj, root):
        vec = T.labels[v](x if T.sides[v] == "U" else y)
        if v in acc:
            vec = vec * acc.pop(v)
        if parent < 0:
            return math.fsum(vec) / n
        # a U-parent receives W (V-child vector); a V-parent receives W^T (U-child vector)
        msg = apply_operator(W, vec, transpose=(T.sides[parent] == "V"))
        acc[parent] = acc[parent] * msg if parent in acc else msg
    raise AssertionError("unreachable")


def tn_eval_brute(T, W, x, y=None, cap: int = DEFAULT_BRUTE_CAP) -> float:
    """Literal index sum over ``[n]^V`` (``[m]`` for U-vertices); oracle only.

    Builds the full product tensor by broadcasting, one axis per vertex.
    """
    _require_valid(T)
    W = np.asarray(W.A if isinstance(W, DenseOperator) else W, dtype=np.float64)
    alt = isinstance(T, AlternatingTensorNetwork)
    if alt:
        m, n = W.shape
        x = _as_inputs(x, T.k, m)
        y = _as_inputs(y, T.l, n)
        dims = [m if s == "U" else n for s in T.sides]
    else:
        n = W.shape[0]
        x = _as_inputs(x, T.k, n)
        dims = [n] * T.n_vertices
    if math.prod(dims) > cap:
        raise MemoryError(f"brute-force sum over {math.prod(dims)} index tuples exceeds cap {cap}")
    nv = T.n_vertices
    total = np.ones(dims)
    for v in range(nv):
        shape = [1] * nv
        shape[v] = dims[v]
        vals = T.labels[v](x if (not alt or T.sides[v] == "U") else y)
        total = total * vals.reshape(shape)
    for a, b in T.edges:
        if alt and T.sides[a] == "V":
            a, b = b, a
        shape = [1] * nv
        shape[a] = dims[a]
        shape[b] = dims[b]
        # factor W[i_a, i_b]; broadcasting puts the lower vertex axis first
        M = W if a < b else W.T
        total = total * M.reshape(shape)
    return math.fsum(total.ravel()) / n


# ---------------------------------------------------------------- tree shapes


def prufer_to_edges(seq: Sequence[int]) -> list:
    """Edges of the labeled tree on ``len(seq) + 2`` vertices with Pruefer
    sequence ``seq``."""
    nv = len(seq) + 2
    degree = [1] * nv
    for s in seq:
        degree[s] += 1
    edges = []
    for s in seq:
        leaf = min(v for v in range(nv) if degree[v] == 1)
        edges.append((leaf, s))
        degree[leaf] -= 1
        degree[s] -= 1
    u, w = [v for v in range(nv) if degree[v] == 1]
    edges.append((u, w))
    return edges


def random_tree(nv: int, rng: np.random.Generator) -> list:
    if nv <= 1:
        return []
    if nv == 2:
        return [(0, 1)]
    return prufer_to_edges(list(rng.integers(0, nv, size=nv - 2)))


def _canonical(adj, v, parent) -> str:
    return "(" + "".join(sorted(_canonical(adj, w, v) for w in adj[v] if w != parent)) + ")"


def tree_canonical_form(nv: int, edges) -> str:
    """Unrooted canonical string: the minimum AHU encoding over all roots."""
    adj = _adjacency(nv, edges)
    return min(_canonical(adj, r, -1) for r in range(nv))


def nonisomorphic_trees(nv: int) -> list:
    """One edge list per isomorphism class of trees on ``nv`` vertices."""
    if nv == 1:
        return [[]]
    if nv == 2:
        return [[(0, 1)]]
    seen = {}
    for seq in itertools.product(range(nv), repeat=nv - 2):
        edges = prufer_to_edges(seq)
        key = tree_canonical_form(nv, edges)
        seen.setdefault(key, edges)
    return [seen[k] for k in sorted(seen)]


def trees_up_to(max_edges: int) -> list:
    """All unlabeled tree shapes with at most ``max_edges`` edges."""
    out = []
    for w in range(max_edges + 1):
        out.extend(nonisomorphic_trees(w + 1))
    return out
