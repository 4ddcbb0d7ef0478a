"""Random matrix ensembles returned as :class:`MatrixOperator` handles.

Symmetric kinds: ``GOE``, ``GeneralizedWigner``, ``SBMCentered`` and
``SymInvariant``.  Rectangular kinds: ``GaussianWhiteNoise``,
``GeneralizedWhiteNoise`` and ``RectInvariant``.  Every sampler is a pure
function of ``(spec, dimensions, seed)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fastops import (
    DCTFactor,
    DenseFactor,
    DenseOperator,
    DiagonalFactor,
    DimensionError,
    HadamardFactor,
    ImplicitOperator,
    MatrixOperator,
    SignedPermutation,
    is_power_of_two,
    materialize_dense,
    transpose_factor,
)
from .rng import GENERATOR_NAME, make_rng
from .spectral import SpectralSpec

SYM_KINDS = ("GOE", "GeneralizedWigner", "SBMCentered", "SymInvariant")
RECT_KINDS = ("GaussianWhiteNoise", "GeneralizedWhiteNoise", "RectInvariant")
ENTRY_LAWS = ("gaussian", "rademacher", "centered_bernoulli", "sparse_rademacher")
BASES = ("hadamard", "dct2", "haar")

DEFAULT_PROFILE_TOL = 1e-6


class InvalidProfileError(ValueError):
    pass


class SinkhornError(RuntimeError):
    pass


# ---------------------------------------------------------------- entry laws


def sample_entries(law: str, size, rng: np.random.Generator, p: Optional[float] = None) -> np.ndarray:
    """Mean-zero, unit-variance i.i.d. draws from a named entry law.

    ``centered_bernoulli(p)`` is ``(B - p)/sqrt(p(1-p))`` and
    ``sparse_rademacher(p)`` is ``+-1/sqrt(p)`` with probability ``p`` and 0
    otherwise.
    """
    if law == "gaussian":
        return rng.standard_normal(size)
    if law == "rademacher":
        return np.where(rng.random(size) < 0.5, -1.0, 1.0)
    if p is None or not 0.0 < p <= 1.0 or (law == "centered_bernoulli" and p == 1.0):
        raise ValueError(f"entry law {law!r} needs a parameter p in (0, 1)")
    u = rng.random(size)
    if law == "centered_bernoulli":
        return ((u < p).astype(np.float64) - p) / math.sqrt(p * (1.0 - p))
    if law == "sparse_rademacher":
        signs = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return np.where(u < p, signs / math.sqrt(p), 0.0)
    raise ValueError(f"unknown entry law {law!r}")


def entry_law_moment(law: str, k: int, p: Optional[float] = None) -> float:
    """Exact ``E[xi^k]`` for the unit-variance entry laws (analytic check of
    the higher-moment condition)."""
    if law == "gaussian":
        return 0.0 if k % 2 else float(math.prod(range(k - 1, 0, -2)))
    if law == "rademacher":
        return 0.0 if k % 2 else 1.0
    if law == "sparse_rademacher":
        return 0.0 if k % 2 else p * p ** (-k / 2)
    if law == "centered_bernoulli":
        s = math.sqrt(p * (1 - p))
        return (p * (1 - p) ** k + (1 - p) * (-p) ** k) / s ** k
    raise ValueError(f"unknown entry law {law!r}")


# ---------------------------------------------------------------- specs


@dataclass
class SymEnsembleSpec:
    kind: str = "GOE"
    variance_profile: Optional[np.ndarray] = None
    entry_law: str = "gaussian"
    entry_param: Optional[float] = None
    p_n: Optional[float] = None
    q_n: Optional[float] = None
    eigenvalue_law: Optional[SpectralSpec] = None
    basis: str = "hadamard"
    profile_tol: float = DEFAULT_PROFILE_TOL
    max_entry: float = math.inf

    def __post_init__(self):
        if self.kind not in SYM_KINDS:
            raise ValueError(f"unknown symmetric ensemble {self.kind!r}")
        if self.entry_law not in ENTRY_LAWS:
            raise ValueError(f"unknown entry law {self.entry_law!r}")
        if self.basis not in BASES:
            raise ValueError(f"unknown basis {self.basis!r}")
        if self.kind == "SymInvariant" and self.eigenvalue_law is None:
            raise ValueError("SymInvariant needs an eigenvalue_law")
        if self.kind == "SBMCentered":
            if self.p_n is None or self.q_n is None:
                raise ValueError("SBMCentered needs p_n and q_n")
            pbar = 0.5 * (self.p_n + self.q_n)
            if not (0 <= self.q_n <= 1 and 0 <= self.p_n <= 1 and 0 < pbar < 1):
                raise ValueError("SBM probabilities must lie in [0, 1] with mean in (0, 1)")
        if self.variance_profile is not None:
            self.variance_profile = np.asarray(self.variance_profile, dtype=np.float64)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "GeneralizedWigner":
            d["entry_law"] = self.entry_law
            if self.entry_param is not None:
                d["entry_param"] = self.entry_param
            if self.variance_profile is not None:
                d["variance_profile"] = self.variance_profile.tolist()
            d["profile_tol"] = self.profile_tol
        elif self.kind == "SBMCentered":
            d.update(p_n=self.p_n, q_n=self.q_n)
        elif self.kind == "SymInvariant":
            d.update(eigenvalue_law=self.eigenvalue_law.to_dict(), basis=self.basis)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SymEnsembleSpec":
        d = dict(d)
        if "eigenvalue_law" in d:
            d["eigenvalue_law"] = SpectralSpec.from_dict(d["eigenvalue_law"])
        return cls(**d)


@dataclass
class RectEnsembleSpec:
    kind: str = "GaussianWhiteNoise"
    variance_profile: Optional[np.ndarray] = None
    entry_law: str = "gaussian"
    entry_param: Optional[float] = None
    singular_value_law: Optional[SpectralSpec] = None
    left_basis: str = "hadamard"
    right_basis: str = "hadamard"
    profile_tol: float = DEFAULT_PROFILE_TOL
    max_entry: float = math.inf

    def __post_init__(self):
        if self.kind not in RECT_KINDS:
            raise ValueError(f"unknown rectangular ensemble {self.kind!r}")
        if self.entry_law not in ENTRY_LAWS:
            raise ValueError(f"unknown entry law {self.entry_law!r}")
        for b in (self.left_basis, self.right_basis):
            if b not in BASES:
                raise ValueError(f"unknown basis {b!r}")
        if self.kind == "RectInvariant" and self.singular_value_law is None:
            raise ValueError("RectInvariant needs a singular_value_law")
        if self.variance_profile is not None:
            self.variance_profile = np.asarray(self.variance_profile, dtype=np.float64)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "GeneralizedWhiteNoise":
            d["entry_law"] = self.entry_law
            if self.entry_param is not None:
                d["entry_param"] = self.entry_param
            if self.variance_profile is not None:
                d["variance_profile"] = self.variance_profile.tolist()
            d["profile_tol"] = self.profile_tol
        elif self.kind == "RectInvariant":
            d.update(
                singular_value_law=self.singular_value_law.to_dict(),
                left_basis=self.left_basis,
                right_basis=self.right_basis,
            )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RectEnsembleSpec":
        d = dict(d)
        if "singular_value_law" in d:
            d["singular_value_law"] = SpectralSpec.from_dict(d["singular_value_law"])
        return cls(**d)


# ---------------------------------------------------------------- validation


@dataclass
class ValidationReport:
    ok: bool
    max_entry: float
    row_deviation: float
    col_deviation: float = 0.0
    messages: list = field(default_factory=list)

    def to_dict(self):
        return {
            "ok": self.ok,
            "max_entry": self.max_entry,
            "row_deviation": self.row_deviation,
            "col_deviation": self.col_deviation,
            "messages": list(self.messages),
        }


def validate_variance_profile(S, side: str = "symmetric", tol: float = DEFAULT_PROFILE_TOL,
                              max_entry: float = math.inf) -> ValidationReport:
    """Check bounded entries and unit row (and column) means of ``S``.

    For ``side="symmetric"`` the row mean is ``(1/n) sum_j S[i, j]``; for
    ``side="rectangular"`` rows are averaged over ``n`` columns and columns
    over ``m`` rows.
    """
    S = np.asarray(S, dtype=np.float64)
    msgs = []
    if S.ndim != 2 or S.size == 0:
        return ValidationReport(False, math.nan, math.nan, math.nan, ["profile must be a nonempty matrix"])
    m, n = S.shape
    if np.any(S < 0) or not np.all(np.isfinite(S)):
        msgs.append("profile has negative or non-finite entries")
    mx = float(S.max())
    if mx > max_entry:
        msgs.append(f"max entry {mx} exceeds bound {max_entry}")
    row_dev = float(np.max(np.abs(S.mean(axis=1) - 1.0)))
    col_dev = 0.0
    if side == "symmetric":
        if m != n:
            msgs.append("symmetric profile must be square")
        elif not np.array_equal(S, S.T):
            msgs.append("symmetric profile is not symmetric")
    elif side == "rectangular":
        col_dev = float(np.max(np.abs(S.mean(axis=0) - 1.0)))
    else:
        raise ValueError(f"side must be 'symmetric' or 'rectangular', got {side!r}")
    if row_dev > tol:
        msgs.append(f"row-mean deviation {row_dev:.3g} exceeds {tol:.3g}")
    if col_dev > tol:
        msgs.append(f"column-mean deviation {col_dev:.3g} exceeds {tol:.3g}")
    return ValidationReport(not msgs, mx, row_dev, col_dev, msgs)


def sinkhorn_scale(V, tol: float = 1e-8, max_iter: int = 10_000):
    """Diagonal scalings with ``diag(d1) V diag(d2)`` having row sums ``n``
    and column sums ``m``.

    Alternates exact row and column normalization starting from unit
    scalings; stops when the worst row-sum error is at most ``tol`` (column
    sums are exact after each sweep).
    """
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2:
        raise DimensionError("V must be a matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if np.any(V < 0) or not np.all(np.isfinite(V)):
        raise ValueError("V must be nonnegative and finite")
    m, n = V.shape
    if np.any(V.sum(axis=1) == 0) or np.any(V.sum(axis=0) == 0):
        raise SinkhornError("V has an all-zero row or column")
    d1 = np.ones(m)
    d2 = np.ones(n)
    for _ in range(max_iter):
        d1 = n / (V @ d2)
        d2 = m / (V.T @ d1)
        rows = d1 * (V @ d2)
        if np.max(np.abs(rows - n)) <= tol:
            S = d1[:, None] * V * d2[None, :]
            return d1, d2, S
    raise SinkhornError(f"Sinkhorn scaling did not reach tol={tol} in {max_iter} iterations")


# ---------------------------------------------------------------- helpers


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix by QR with the R-diagonal sign fix."""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s[None, :]


def basis_factor(kind: str, n: int, rng: np.random.Generator):
    if kind == "hadamard":
        if not is_power_of_two(n):
            raise DimensionError(f"hadamard basis needs a power-of-2 dimension, got {n}")
        return HadamardFactor(n)
    if kind == "dct2":
        return DCTFactor(n)
    if kind == "haar":
        return DenseFactor(haar_orthogonal(n, rng))
    raise ValueError(f"unknown basis {kind!r}")


def _sym_from_upper(X: np.ndarray) -> np.ndarray:
    U = np.triu(X)
    return U + np.triu(U, 1).T


def _provenance(spec, dims, seed):
    return {"spec": spec.to_dict(), "dims": list(dims), "seed": int(seed), "generator": GENERATOR_NAME}


# ---------------------------------------------------------------- SBM


@dataclass
class SBMSample:
    A: np.ndarray
    f: np.ndarray
    lambda_n: float
    W: np.ndarray
    pbar: float


def sbm_lambda(n: int, p: float, q: float) -> float:
    pbar = 0.5 * (p + q)
    return n * (p - q) ** 2 / (4.0 * pbar * (1.0 - pbar))


def sbm_memberships(n: int, rng: np.random.Generator) -> np.ndarray:
    """Balanced +-1 labels in random order (``ceil(n/2)`` of them +1)."""
    f = np.where(np.arange(n) < (n + 1) // 2, 1.0, -1.0)
    return f[rng.permutation(n)]


def sbm_decompose(A, f, p: float, q: float):
    """Split a normalized adjacency matrix into ``sqrt(lam)/n f f^T + W``.

    Returns ``(W, lambda_n)``.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    pbar = 0.5 * (p + q)
    lam = sbm_lambda(n, p, q)
    M = (A - pbar) / math.sqrt(n * pbar * (1.0 - pbar))
    W = M - (math.sqrt(lam) / n) * np.outer(f, f)
    return W, lam


def sample_sbm(n: int, p: float, q: float, seed: int) -> SBMSample:
    """Two-community SBM adjacency with self-loops, and its noise part."""
    rng = make_rng(seed)
    f = sbm_memberships(n, rng)
    same = np.equal.outer(f, f)
    probs = np.where(same, p, q)
    A = _sym_from_upper((rng.random((n, n)) < probs).astype(np.float64))
    W, lam = sbm_decompose(A, f, p, q)
    return SBMSample(A=A, f=f, lambda_n=lam, W=W, pbar=0.5 * (p + q))


# ---------------------------------------------------------------- samplers


def sample_symmetric(spec: SymEnsembleSpec, n: int, seed: int) -> MatrixOperator:
    """Draw an ``n x n`` symmetric matrix from ``spec``.

    ``SBMCentered`` stores the membership vector and ``lambda_n`` in
    ``op.meta``; ``SymInvariant`` returns an implicit product that is never
    materialized.
    """
    if n < 1:
        raise DimensionError("n must be positive")
    prov = _provenance(spec, (n, n), seed)
    rng = make_rng(seed)
    kind = spec.kind
    if kind == "GOE":
        G = rng.standard_normal((n, n))
        return DenseOperator((G + G.T) / math.sqrt(2.0 * n), symmetric=True, provenance=prov)
    if kind == "GeneralizedWigner":
        S = spec.variance_profile if spec.variance_profile is not None else np.ones((n, n))
        if S.shape != (n, n):
            raise DimensionError(f"variance profile shape {S.shape} does not match n={n}")
        rep = validate_variance_profile(S, "symmetric", spec.profile_tol, spec.max_entry)
        if not rep.ok:
            raise InvalidProfileError("; ".join(rep.messages))
        X = sample_entries(spec.entry_law, (n, n), rng, spec.entry_param)
        W = _sym_from_upper(X * np.sqrt(S / n))
        return DenseOperator(W, symmetric=True, provenance=prov)
    if kind == "SBMCentered":
        s = sample_sbm(n, spec.p_n, spec.q_n, seed)
        return DenseOperator(s.W, symmetric=True, provenance=prov,
                             meta={"f": s.f, "lambda_n": s.lambda_n, "pbar": s.pbar})
    # SymInvariant
    H = basis_factor(spec.basis, n, rng)
    Pv = SignedPermutation.random(n, rng)
    Pe = SignedPermutation.random(n, rng)
    d = spec.eigenvalue_law.sample(n, rng)
    D = DiagonalFactor(d, n, n)
    factors = [Pv, H, Pe, D, Pe.inverse(), transpose_factor(H), Pv.inverse()]
    return ImplicitOperator(factors, symmetric=True, provenance=prov, meta={"eigenvalues": d})


def sample_rectangular(spec: RectEnsembleSpec, m: int, n: int, seed: int) -> MatrixOperator:
    """Draw an ``m x n`` matrix from ``spec`` (entry variance scale ``1/n``)."""
    if m < 1 or n < 1:
        raise DimensionError("m and n must be positive")
    prov = _provenance(spec, (m, n), seed)
    rng = make_rng(seed)
    kind = spec.kind
    if kind == "GaussianWhiteNoise":
        return DenseOperator(rng.standard_normal((m, n)) / math.sqrt(n), provenance=prov)
    if kind == "GeneralizedWhiteNoise":
        S = spec.variance_profile if spec.variance_profile is not None else np.ones((m, n))
        if S.shape != (m, n):
            raise DimensionError(f"variance profile shape {S.shape} does not match ({m}, {n})")
        rep = validate_variance_profile(S, "rectangular", spec.profile_tol, spec.max_entry)
        if not rep.ok:
            raise InvalidProfileError("; ".join(rep.messages))
        X = sample_entries(spec.entry_law, (m, n), rng, spec.entry_param)
        return DenseOperator(X * np.sqrt(S / n), provenance=prov)
    # RectInvariant: W = Pi_U H Pi_E D Pi_F^T K^T Pi_V^T
    H = basis_factor(spec.left_basis, m, rng)
    K = basis_factor(spec.right_basis, n, rng)
    Pu = SignedPermutation.random(m, rng)
    Pe = SignedPermutation.random(m, rng)
    Pv = SignedPermutation.random(n, rng)
    Pf = SignedPermutation.random(n, rng)
    d = spec.singular_value_law.sample(min(m, n), rng)
    D = DiagonalFactor(d, m, n)
    factors = [Pu, H, Pe, D, Pf.inverse(), transpose_factor(K), Pv.inverse()]
    return ImplicitOperator(factors, provenance=prov, meta={"singular_values": d})


def export_dense_csv(op: MatrixOperator, path) -> None:
    """Write the materialized matrix as CSV with a ``c0,c1,...`` header and
    17 significant digits."""
    A = materialize_dense(op)
    header = ",".join(f"c{j}" for j in range(A.shape[1]))
    np.savetxt(path, A, delimiter=",", fmt="%.17g", header=header, comments="")
