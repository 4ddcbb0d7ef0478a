"""Moment oracles: maps from a multi-exponent to a joint moment."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ..spectral import SpectralSpec, catalan


class MissingMomentError(KeyError):
    pass


class MomentOracle:
    """``oracle(exps) = E[prod_j X_j^{exps[j]}]`` for a ``k``-dimensional law."""

    k: int = 1
    sample_size = None  # set for empirical oracles

    def __call__(self, exps) -> float:
        exps = tuple(int(e) for e in exps)
        if len(exps) != self.k:
            raise ValueError(f"oracle has {self.k} variables, got exponent {exps}")
        if any(e < 0 for e in exps):
            raise ValueError("exponents must be nonnegative")
        if not any(exps):
            return 1
        return self._moment(exps)

    def _moment(self, exps):
        raise NotImplementedError


# ------------------------------------------------------------- 1-d laws


def normal_moment(a: int) -> int:
    return 0 if a % 2 else math.prod(range(a - 1, 0, -2))


def rademacher_moment(a: int) -> int:
    return 0 if a % 2 else 1


def semicircle_moment(a: int) -> int:
    return 0 if a % 2 else catalan(a // 2)


LAWS_1D: dict = {
    "normal": normal_moment,
    "rademacher": rademacher_moment,
    "semicircle": semicircle_moment,
}


class IndependentMoments(MomentOracle):
    """Independent coordinates; ``marginals[j](a) = E[X_j^a]``."""

    def __init__(self, marginals: Sequence[Callable[[int], float]]):
        self.marginals = [LAWS_1D[m] if isinstance(m, str) else m for m in marginals]
        self.k = len(self.marginals)

    def _moment(self, exps):
        out = 1
        for f, a in zip(self.marginals, exps):
            if a:
                out = out * f(a)
        return out


def standard_normal_moments(k: int = 1) -> IndependentMoments:
    return IndependentMoments(["normal"] * k)


class SpectralMoments(MomentOracle):
    """One-dimensional oracle backed by :class:`SpectralSpec` moments."""

    def __init__(self, spec: SpectralSpec):
        self.spec = spec
        self.k = 1

    def _moment(self, exps):
        return self.spec.moment(exps[0])


class TableMoments(MomentOracle):
    """Explicit table ``{exps: value}``; a missing entry is an error."""

    def __init__(self, k: int, table: dict):
        self.k = k
        self.table = {tuple(int(e) for e in key): v for key, v in table.items()}

    def _moment(self, exps):
        try:
            return self.table[exps]
        except KeyError:
            raise MissingMomentError(f"moment {exps} not in table") from None


class EmpiricalMoments(MomentOracle):
    """Sample moments of the rows of an ``(N, k)`` array."""

    def __init__(self, samples):
        s = np.asarray(samples, dtype=np.float64)
        if s.ndim == 1:
            s = s[:, None]
        self.samples = s
        self.k = s.shape[1]
        self.sample_size = s.shape[0]

    def _moment(self, exps):
        prod = np.ones(self.sample_size)
        for j, a in enumerate(exps):
            if a:
                prod = prod * self.samples[:, j] ** a
        return float(np.mean(prod))


class RandomIntegerMoments(MomentOracle):
    """Arbitrary (not necessarily realizable) rational moments drawn once per
    exponent from a seeded stream; used to test algebraic identities that do
    not depend on the moments being those of a law."""

    def __init__(self, k: int, seed: int, lo: int = -3, hi: int = 4):
        self.k = k
        self.seed = seed
        self.lo, self.hi = lo, hi
        self._cache: dict = {}

    def _moment(self, exps):
        if exps not in self._cache:
            rng = np.random.default_rng([self.seed, *exps])
            num = int(rng.integers(self.lo, self.hi))
            den = int(rng.integers(1, 4))
            self._cache[exps] = Fraction(num, den)
        return self._cache[exps]
