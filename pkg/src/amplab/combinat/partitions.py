"""Set partitions of ``{0, ..., m-1}``, pairings, the merge/divide metric and
Moebius functions."""
from __future__ import annotations

import math
from functools import lru_cache
from itertools import product
from typing import Iterable, Iterator

PAIRING_CAP = 12


class GroundSetError(ValueError):
    pass


class Partition:
    """A set partition in canonical form: sorted blocks ordered by minimum.

    Instances are immutable and hash structurally.
    """

    __slots__ = ("m", "blocks", "_labels", "_hash")

    def __init__(self, blocks: Iterable[Iterable[int]], m: int | None = None):
        bl = [tuple(sorted(int(x) for x in b)) for b in blocks]
        bl = [b for b in bl if b]
        bl.sort(key=lambda b: b[0])
        elems = [x for b in bl for x in b]
        if m is None:
            m = len(elems)
        if sorted(elems) != list(range(m)):
            raise GroundSetError(f"blocks {bl} do not partition range({m})")
        labels = [0] * m
        for i, b in enumerate(bl):
            for x in b:
                labels[x] = i
        self.m = m
        self.blocks = tuple(bl)
        self._labels = tuple(labels)
        self._hash = hash((m, self.blocks))

    # constructors ------------------------------------------------------------
    @classmethod
    def from_labels(cls, labels) -> "Partition":
        groups: dict = {}
        for i, lab in enumerate(labels):
            groups.setdefault(lab, []).append(i)
        return cls(groups.values(), len(labels))

    @classmethod
    def finest(cls, m: int) -> "Partition":
        return cls([[i] for i in range(m)], m)

    @classmethod
    def coarsest(cls, m: int) -> "Partition":
        return cls([list(range(m))] if m else [], m)

    # basic queries -------------------------------------------------------------
    @property
    def labels(self) -> tuple:
        """Block index of each element (restricted-growth form)."""
        return self._labels

    def __len__(self) -> int:
        return len(self.blocks)

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and self.m == other.m and self.blocks == other.blocks

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        inner = ",".join("{" + ",".join(str(x + 1) for x in b) + "}" for b in self.blocks)
        return f"Partition({inner})"

    def block_of(self, x: int) -> tuple:
        return self.blocks[self._labels[x]]

    def is_pairing(self) -> bool:
        return all(len(b) == 2 for b in self.blocks)

    def is_even(self) -> bool:
        return all(len(b) % 2 == 0 for b in self.blocks)

    def _check(self, other: "Partition"):
        if not isinstance(other, Partition) or other.m != self.m:
            raise GroundSetError("partitions live on different ground sets")

    # lattice operations -------------------------------------------------------
    def join(self, other: "Partition") -> "Partition":
        return partition_join(self, other)

    __or__ = join

    def meet(self, other: "Partition") -> "Partition":
        self._check(other)
        return Partition.from_labels(list(zip(self._labels, other._labels)))

    def refines(self, other: "Partition") -> bool:
        """``self <= other``: every block of ``self`` sits inside a block of ``other``."""
        self._check(other)
        return all(len({other._labels[x] for x in b}) == 1 for b in self.blocks)

    __le__ = refines

    def __lt__(self, other: "Partition") -> bool:
        return self != other and self.refines(other)

    def to_list(self, one_based: bool = False) -> list:
        off = 1 if one_based else 0
        return [[x + off for x in b] for b in self.blocks]


def partition_join(a: Partition, b: Partition) -> Partition:
    """Least upper bound, by union-find over co-blocked elements."""
    a._check(b)
    parent = list(range(a.m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for blocks in (a.blocks, b.blocks):
        for blk in blocks:
            r = find(blk[0])
            for x in blk[1:]:
                rx = find(x)
                if rx != r:
                    parent[rx] = r
    return Partition.from_labels([find(x) for x in range(a.m)])


def partition_metric(a: Partition, b: Partition) -> int:
    """``d(a, b) = |a| + |b| - 2 |a v b|``."""
    return len(a) + len(b) - 2 * len(partition_join(a, b))


# ---------------------------------------------------------------- enumeration


def enumerate_partitions(m: int) -> Iterator[Partition]:
    """All set partitions of ``range(m)`` via restricted-growth strings."""
    if m == 0:
        yield Partition([], 0)
        return
    labels = [0] * m

    def rec(i, nblocks):
        if i == m:
            yield Partition.from_labels(labels)
            return
        for lab in range(nblocks + 1):
            labels[i] = lab
            yield from rec(i + 1, max(nblocks, lab + 1))

    labels[0] = 0
    yield from rec(1, 1)


def bell_number(m: int) -> int:
    row = [1]
    for _ in range(m):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def enumerate_pairings(m: int, cap: int = PAIRING_CAP) -> Iterator[Partition]:
    """All ``(m-1)!!`` pairings of ``range(m)`` in canonical order."""
    if m % 2:
        raise ValueError(f"pairings need an even ground set, got m={m}")
    if m > cap:
        raise ValueError(f"pairing enumeration capped at m={cap}, got m={m}")

    def rec(rest):
        if not rest:
            yield []
            return
        a = rest[0]
        for j in range(1, len(rest)):
            pair = (a, rest[j])
            remaining = rest[1:j] + rest[j + 1:]
            for tail in rec(remaining):
                yield [pair] + tail

    for blocks in rec(list(range(m))):
        yield Partition(blocks, m)


@lru_cache(maxsize=None)
def pairings(m: int) -> tuple:
    return tuple(enumerate_pairings(m))


# ---------------------------------------------------------------- Moebius


def interval(low: Partition, high: Partition) -> list:
    """All ``tau`` with ``low <= tau <= high``."""
    if not low.refines(high):
        raise ValueError("interval needs low <= high")
    # for each block of ``high``, partition the ``low``-blocks it contains
    groups = [[i for i, b in enumerate(low.blocks) if high._labels[b[0]] == j] for j in range(len(high))]
    choices = [list(enumerate_partitions(len(g))) for g in groups]
    out = []
    for combo in product(*choices):
        labels = [0] * low.m
        offset = 0
        for g, p in zip(groups, combo):
            for local, bi in enumerate(g):
                for x in low.blocks[bi]:
                    labels[x] = offset + p.labels[local]
            offset += len(p)
        out.append(Partition.from_labels(labels))
    return out


@lru_cache(maxsize=None)
def moebius_partitions(pi: Partition, sigma: Partition) -> int:
    """Moebius function of the partition lattice, from
    ``sum_{pi <= tau <= sigma} mu(pi, tau) = [pi == sigma]``."""
    if not pi.refines(sigma):
        raise ValueError("moebius_partitions needs pi <= sigma")
    if pi == sigma:
        return 1
    return -sum(moebius_partitions(pi, tau) for tau in interval(pi, sigma) if tau != sigma)


@lru_cache(maxsize=None)
def moeb_pairings(pi: Partition, pi2: Partition) -> int:
    """Signed count of d-geodesic chains of distinct pairings from ``pi`` to
    ``pi2`` (``(-1)^k`` for a chain with ``k`` steps)."""
    if pi.m != pi2.m:
        raise GroundSetError("pairings live on different ground sets")
    if not (pi.is_pairing() and pi2.is_pairing()):
        raise ValueError("moeb_pairings needs two pairings")
    if pi == pi2:
        return 1
    total = partition_metric(pi, pi2)
    acc = 0
    for sigma in pairings(pi.m):
        if sigma != pi and partition_metric(pi, sigma) + partition_metric(sigma, pi2) == total:
            acc -= moeb_pairings(sigma, pi2)
    return acc


def geodesic_chains(start: Partition, end: Partition, candidates, budget: int | None = None):
    """Yield chains ``start = c_0 -> ... -> c_k = end`` of distinct elements of
    ``candidates`` with ``sum d(c_i, c_{i+1}) = d(start, end)`` (or ``budget``)."""
    target = partition_metric(start, end) if budget is None else budget

    def rec(chain, used):
        last = chain[-1]
        if last == end and used == target:
            yield list(chain)
            return
        for c in candidates:
            if c == last:
                continue
            step = partition_metric(last, c)
            if used + step + partition_metric(c, end) <= target:
                chain.append(c)
                yield from rec(chain, used + step)
                chain.pop()

    yield from rec([start], 0)
