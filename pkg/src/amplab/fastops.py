"""Structured transforms and the matrix-operator abstraction.

A :class:`MatrixOperator` is either dense (:class:`DenseOperator`) or an
ordered product of cheap factors (:class:`ImplicitOperator`).  All operators
accept a vector of shape ``(in,)`` or a block of column vectors of shape
``(in, b)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft

DEFAULT_DENSE_CAP = 4096 * 4096


class DimensionError(ValueError):
    pass


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def fwht_inplace(x: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard butterflies along axis 0, in place.

    ``x`` must be a float array whose leading dimension is a power of two.
    """
    n = x.shape[0]
    if not is_power_of_two(n):
        raise DimensionError(f"FWHT length must be a power of 2, got {n}")
    rest = x.shape[1:]
    h = 1
    while h < n:
        y = x.reshape((n // (2 * h), 2, h) + rest)
        a = y[:, 0]
        b = y[:, 1]
        a += b          # a <- a + b
        b *= -2.0
        b += a          # b <- (a + b) - 2b = a - b
        h *= 2
    return x


def fwht_normalized(x) -> np.ndarray:
    """Orthonormal Walsh-Hadamard transform ``H x`` along axis 0.

    ``H`` is the Sylvester-ordered Hadamard matrix scaled by ``n**-0.5``, so
    it is symmetric, orthogonal and an involution.
    """
    out = np.array(x, dtype=np.float64, copy=True)
    if out.ndim == 0:
        raise DimensionError("FWHT needs at least one dimension")
    fwht_inplace(out)
    out *= 1.0 / np.sqrt(out.shape[0])
    return out


def hadamard_matrix(n: int) -> np.ndarray:
    """Dense orthonormal Sylvester Hadamard matrix (reference use only)."""
    if not is_power_of_two(n):
        raise DimensionError(f"Hadamard order must be a power of 2, got {n}")
    H = np.ones((1, 1))
    while H.shape[0] < n:
        H = np.block([[H, H], [H, -H]])
    return H / np.sqrt(n)


def dct2_matrix(n: int) -> np.ndarray:
    return scipy.fft.dct(np.eye(n), type=2, norm="ortho", axis=0)


# ---------------------------------------------------------------- factors


class Factor:
    """A linear map with a cheap transpose.  ``shape = (out, in)``."""

    shape: tuple[int, int]

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply_t(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dense(self) -> np.ndarray:
        return self.apply(np.eye(self.shape[1]))


@dataclass(frozen=True, eq=False)
class SignedPermutation(Factor):
    """``Pi = P Xi`` with ``P[i, perm[i]] = 1`` and ``Xi = diag(signs)``.

    ``(Pi v)[i] = signs[perm[i]] * v[perm[i]]``.
    """

    perm: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.int64)
        signs = np.asarray(self.signs, dtype=np.float64)
        if perm.ndim != 1 or perm.shape != signs.shape:
            raise DimensionError("perm and signs must be 1-d of equal length")
        if not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ValueError("perm is not a permutation")
        if not np.all(np.abs(signs) == 1.0):
            raise ValueError("signs must be +1 or -1")
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "signs", signs)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(perm.size)
        object.__setattr__(self, "_inv", inv)

    @property
    def shape(self):
        return (self.perm.size, self.perm.size)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "SignedPermutation":
        return cls(rng.permutation(n), rng.choice(np.array([-1.0, 1.0]), size=n))

    @classmethod
    def identity(cls, n: int) -> "SignedPermutation":
        return cls(np.arange(n), np.ones(n))

    def _signs_col(self, x):
        return self.signs if x.ndim == 1 else self.signs[:, None]

    def apply(self, x):
        return (self._signs_col(x) * x)[self.perm]

    def apply_t(self, x):
        return self._signs_col(x) * x[self._inv]

    def inverse(self) -> "SignedPermutation":
        # (Pi^T u)[j] = signs[j] u[inv[j]]
        return SignedPermutation(self._inv, self.signs[self.perm])

    def matrix(self) -> np.ndarray:
        n = self.perm.size
        M = np.zeros((n, n))
        M[np.arange(n), self.perm] = self.signs[self.perm]
        return M


@dataclass(frozen=True, eq=False)
class HadamardFactor(Factor):
    n: int

    def __post_init__(self):
        if not is_power_of_two(self.n):
            raise DimensionError(f"hadamard basis requires n a power of 2, got {self.n}")

    @property
    def shape(self):
        return (self.n, self.n)

    def apply(self, x):
        return fwht_normalized(x)

    apply_t = apply


@dataclass(frozen=True, eq=False)
class DCTFactor(Factor):
    """Orthonormal DCT-II; the transpose is the orthonormal DCT-III."""

    n: int

    @property
    def shape(self):
        return (self.n, self.n)

    def apply(self, x):
        return scipy.fft.dct(x, type=2, norm="ortho", axis=0)

    def apply_t(self, x):
        return scipy.fft.idct(x, type=2, norm="ortho", axis=0)


@dataclass(frozen=True, eq=False)
class DenseFactor(Factor):
    M: np.ndarray

    @property
    def shape(self):
        return self.M.shape

    def apply(self, x):
        return self.M @ x

    def apply_t(self, x):
        return self.M.T @ x


@dataclass(frozen=True, eq=False)
class DiagonalFactor(Factor):
    """Rectangular diagonal ``out x in`` with ``d`` of length ``min(out, in)``."""

    d: np.ndarray
    out_dim: int
    in_dim: int

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64)
        if d.shape != (min(self.out_dim, self.in_dim),):
            raise DimensionError("diagonal length must equal min(out, in)")
        object.__setattr__(self, "d", d)

    @property
    def shape(self):
        return (self.out_dim, self.in_dim)

    def _mul(self, x, out_dim):
        k = self.d.size
        out = np.zeros((out_dim,) + x.shape[1:])
        dd = self.d if x.ndim == 1 else self.d[:, None]
        out[:k] = dd * x[:k]
        return out

    def apply(self, x):
        return self._mul(x, self.out_dim)

    def apply_t(self, x):
        return self._mul(x, self.in_dim)


@dataclass(frozen=True, eq=False)
class RowMask(Factor):
    """Keeps rows ``rows`` of an ``n``-vector; the transpose zero-pads."""

    rows: np.ndarray
    n: int

    def __post_init__(self):
        object.__setattr__(self, "rows", np.asarray(self.rows, dtype=np.int64))

    @property
    def shape(self):
        return (self.rows.size, self.n)

    def apply(self, x):
        return x[self.rows]

    def apply_t(self, x):
        out = np.zeros((self.n,) + x.shape[1:])
        out[self.rows] = x
        return out


@dataclass(frozen=True, eq=False)
class ScaleFactor(Factor):
    c: float
    n: int

    @property
    def shape(self):
        return (self.n, self.n)

    def apply(self, x):
        return self.c * x

    apply_t = apply


@dataclass(frozen=True, eq=False)
class TransposedFactor(Factor):
    base: Factor

    @property
    def shape(self):
        out, inn = self.base.shape
        return (inn, out)

    def apply(self, x):
        return self.base.apply_t(x)

    def apply_t(self, x):
        return self.base.apply(x)


def transpose_factor(f: Factor) -> Factor:
    if isinstance(f, SignedPermutation):
        return f.inverse()
    if isinstance(f, (HadamardFactor, ScaleFactor)):
        return f
    if isinstance(f, TransposedFactor):
        return f.base
    return TransposedFactor(f)


# -------------------------------------------------------------- operators


@dataclass
class MatrixOperator:
    """Base class: a (possibly implicit) real matrix with seeded provenance."""

    symmetric: bool = False
    provenance: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        raise NotImplementedError

    def matvec(self, v):
        raise NotImplementedError

    def rmatvec(self, v):
        raise NotImplementedError

    def __matmul__(self, v):
        return apply_operator(self, v)

    @property
    def T(self) -> "MatrixOperator":
        return TransposedOperator(self)


class DenseOperator(MatrixOperator):
    def __init__(self, A, symmetric: bool = False, provenance=None, meta=None):
        super().__init__(symmetric, dict(provenance or {}), dict(meta or {}))
        A = np.asarray(A, dtype=np.float64)
        if A.ndim != 2:
            raise DimensionError("dense operator needs a 2-d array")
        A = A.view()  # read-only view; the caller's array stays writable
        A.setflags(write=False)
        self.A = A

    @property
    def shape(self):
        return self.A.shape

    def matvec(self, v):
        return self.A @ v

    def rmatvec(self, v):
        return self.A.T @ v


class ImplicitOperator(MatrixOperator):
    """Product ``F_1 F_2 ... F_k`` of factors; applied right to left."""

    def __init__(self, factors: Sequence[Factor], symmetric: bool = False, provenance=None, meta=None):
        super().__init__(symmetric, dict(provenance or {}), dict(meta or {}))
        factors = tuple(factors)
        if not factors:
            raise ValueError("need at least one factor")
        for left, right in zip(factors[:-1], factors[1:]):
            if left.shape[1] != right.shape[0]:
                raise DimensionError(f"factor chain mismatch: {left.shape} then {right.shape}")
        self.factors = factors

    @property
    def shape(self):
        return (self.factors[0].shape[0], self.factors[-1].shape[1])

    def matvec(self, v):
        x = v
        for f in reversed(self.factors):
            x = f.apply(x)
        return x

    def rmatvec(self, v):
        x = v
        for f in self.factors:
            x = f.apply_t(x)
        return x


class TransposedOperator(MatrixOperator):
    def __init__(self, base: MatrixOperator):
        super().__init__(base.symmetric, dict(base.provenance), dict(base.meta))
        self.base = base

    @property
    def shape(self):
        m, n = self.base.shape
        return (n, m)

    def matvec(self, v):
        return self.base.rmatvec(v)

    def rmatvec(self, v):
        return self.base.matvec(v)


def identity_operator(n: int) -> ImplicitOperator:
    return ImplicitOperator([ScaleFactor(1.0, n)], symmetric=True, provenance={"kind": "identity"})


def apply_operator(op: MatrixOperator, v, transpose: bool = False) -> np.ndarray:
    """``W v`` (or ``W^T v``) for a vector or a block of column vectors."""
    v = np.asarray(v, dtype=np.float64)
    m, n = op.shape
    expected = m if transpose else n
    if v.ndim not in (1, 2) or v.shape[0] != expected:
        raise DimensionError(f"operator of shape {op.shape} cannot act on {v.shape} (transpose={transpose})")
    return op.rmatvec(v) if transpose else op.matvec(v)


def materialize_dense(op: MatrixOperator, cap: int = DEFAULT_DENSE_CAP, block: int = 512) -> np.ndarray:
    """Dense copy of ``op`` built by applying it to blocks of basis vectors."""
    m, n = op.shape
    if m * n > cap:
        raise MemoryError(f"materializing {m}x{n} exceeds cap of {cap} entries")
    if isinstance(op, DenseOperator):
        return np.array(op.A)
    out = np.empty((m, n))
    for start in range(0, n, block):
        stop = min(n, start + block)
        E = np.zeros((n, stop - start))
        E[np.arange(start, stop), np.arange(stop - start)] = 1.0
        out[:, start:stop] = op.matvec(E)
    return out
