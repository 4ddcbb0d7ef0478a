"""Sparse multivariate polynomials with integer exponents."""
from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Sequence

import numpy as np


class MultiPoly:
    """``sum_j c_j prod_i x_i^{a_ji}`` in ``k`` variables.

    Terms are kept merged, with zero coefficients dropped, and sorted by
    exponent tuple, so two equal polynomials have identical ``terms``.
    """

    def __init__(self, k: int, terms: Iterable = ()):
        acc: dict = defaultdict(float)
        for exps, coeff in terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != k:
                raise ValueError(f"exponent {exps} does not have {k} entries")
            if any(e < 0 for e in exps):
                raise ValueError("exponents must be nonnegative")
            acc[exps] += float(coeff)
        merged = tuple(sorted((e, c) for e, c in acc.items() if c != 0.0))
        self.k = int(k)
        self.terms = merged

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, c: float, k: int = 0) -> "MultiPoly":
        return cls(k, [((0,) * k, c)])

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff: float = 1.0) -> "MultiPoly":
        return cls(len(exps), [(exps, coeff)])

    @classmethod
    def variable(cls, i: int, k: int) -> "MultiPoly":
        e = [0] * k
        e[i] = 1
        return cls(k, [(e, 1.0)])

    # algebra ------------------------------------------------------------
    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        self._check(other)
        return MultiPoly(self.k, self.terms + other.terms)

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        return self + other.scale(-1.0)

    def __mul__(self, other) -> "MultiPoly":
        if np.isscalar(other):
            return self.scale(float(other))
        self._check(other)
        out = []
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                out.append((tuple(a + b for a, b in zip(e1, e2)), c1 * c2))
        return MultiPoly(self.k, out)

    __rmul__ = __mul__

    def scale(self, c: float) -> "MultiPoly":
        return MultiPoly(self.k, [(e, c * v) for e, v in self.terms])

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiPoly) and self.k == other.k and self.terms == other.terms

    def __hash__(self):
        return hash((self.k, self.terms))

    def _check(self, other):
        if not isinstance(other, MultiPoly) or other.k != self.k:
            raise ValueError("polynomials must share the number of variables")

    def split(self, n_groups: int = 2) -> list["MultiPoly"]:
        """Partition the monomials round-robin into ``n_groups`` summands."""
        groups = [[] for _ in range(n_groups)]
        for i, t in enumerate(self.terms):
            groups[i % n_groups].append(t)
        return [MultiPoly(self.k, g) for g in groups]

    # evaluation -----------------------------------------------------------
    def __call__(self, X) -> np.ndarray:
        """Evaluate on the rows of ``X`` (shape ``(N, k)``); returns ``(N,)``.

        A 1-d ``X`` is read as a single variable when ``k == 1``.
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None] if self.k == 1 else X[None, :]
        if X.shape[1] != self.k:
            raise ValueError(f"polynomial in {self.k} variables got {X.shape[1]} columns")
        N = X.shape[0]
        out = np.zeros(N)
        if not self.terms:
            return out
        maxdeg = [max(e[i] for e, _ in self.terms) for i in range(self.k)]
        powers = []
        for i in range(self.k):
            p = np.empty((maxdeg[i] + 1, N))
            p[0] = 1.0
            for d in range(1, maxdeg[i] + 1):
                p[d] = p[d - 1] * X[:, i]
            powers.append(p)
        for exps, c in self.terms:
            term = np.full(N, c)
            for i, e in enumerate(exps):
                if e:
                    term *= powers[i][e]
            out += term
        return out

    def expectation(self, moments) -> float:
        """``E[q(X)]`` where ``moments(exps)`` returns ``E[prod X_i^{e_i}]``."""
        return float(sum(c * moments(e) for e, c in self.terms))

    # serialization --------------------------------------------------------
    def to_list(self) -> list:
        return [[list(e), c] for e, c in self.terms]

    @classmethod
    def from_list(cls, k: int, data) -> "MultiPoly":
        return cls(k, [(e, c) for e, c in data])

    def __repr__(self):
        if not self.terms:
            return f"MultiPoly(k={self.k}, 0)"
        parts = []
        for e, c in self.terms:
            mono = "*".join(f"x{i+1}^{a}" if a > 1 else f"x{i+1}" for i, a in enumerate(e) if a)
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return f"MultiPoly(k={self.k}, " + " + ".join(parts) + ")"


def monomials_up_to(k: int, max_degree: int) -> list[tuple]:
    """Exponent tuples of all monomials in ``k`` variables with total degree
    between 1 and ``max_degree``, ordered by degree then lexicographically."""
    out = []

    def rec(prefix, remaining, i):
        if i == k:
            if sum(prefix) >= 1:
                out.append(tuple(prefix))
            return
        for e in range(remaining, -1, -1):
            rec(prefix + [e], remaining - e, i + 1)

    rec([], max_degree, 0)
    out.sort(key=lambda e: (sum(e), tuple(-x for x in e)))
    return out
