"""State evolution for symmetric (GOE-type) and rectangular (white-noise
type) AMP.

Expectations are Monte Carlo averages over ``N`` samples drawn in blocks;
block ``b`` owns the generator ``make_rng(seed, STREAM_SE, b)`` and draws in a
fixed order, so results depend only on the model and the block size.  The
Gaussian iterates are built one column at a time from the conditional law
given earlier columns, which reuses the same sample across the recursion:
``Sigma_s`` is exactly the upper-left block of ``Sigma_t``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .nonlinear import DERIV_MODES, NonlinearitySpec
from .rng import STREAM_SE, make_rng

DEFAULT_N = 1_000_000
DEFAULT_BLOCK = 1 << 17
PSD_CLIP = 1e-10
COND_LIMIT = 1e12


class SingularCovarianceError(RuntimeError):
    pass


class ModelError(ValueError):
    pass


# ---------------------------------------------------------------- init laws

_SCALAR_LAWS = ("normal", "rademacher", "constant", "uniform")


def _draw_scalar(law: str, size: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    if law == "normal":
        return scale * rng.standard_normal(size)
    if law == "rademacher":
        return scale * (2.0 * rng.integers(0, 2, size) - 1.0)
    if law == "constant":
        return np.full(size, float(scale))
    if law == "uniform":  # unit variance
        return scale * rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size)
    raise ModelError(f"unknown scalar law {law!r}; choose from {_SCALAR_LAWS}")


@dataclass
class InitLaw:
    """Independent laws for ``U_1``, side columns ``F`` and (rectangular)
    side columns ``G``.  Used both by state evolution and to draw the AMP
    initialization vectors, so the two always agree."""

    u1: str = "normal"
    u1_scale: float = 1.0
    f: list = field(default_factory=list)
    g: list = field(default_factory=list)

    def __post_init__(self):
        for law in [self.u1, *self.f, *self.g]:
            if law not in _SCALAR_LAWS:
                raise ModelError(f"unknown scalar law {law!r}")
        if self.u1_scale == 0:
            raise ModelError("E[U_1^2] must be positive")

    @property
    def k(self) -> int:
        return len(self.f)

    @property
    def l(self) -> int:
        return len(self.g)

    def sample_u(self, size: int, rng: np.random.Generator):
        U1 = _draw_scalar(self.u1, size, rng, self.u1_scale)
        F = np.column_stack([_draw_scalar(law, size, rng) for law in self.f]) if self.f else np.zeros((size, 0))
        return U1, F

    def sample_g(self, size: int, rng: np.random.Generator):
        return np.column_stack([_draw_scalar(law, size, rng) for law in self.g]) if self.g else np.zeros((size, 0))

    def to_dict(self) -> dict:
        return {"u1": self.u1, "u1_scale": self.u1_scale, "f": list(self.f), "g": list(self.g)}

    @classmethod
    def from_dict(cls, d: dict) -> "InitLaw":
        return cls(**d)


@dataclass
class SEModel:
    """``u_spec.at(t)`` produces ``u_{t+1}`` from ``t`` iterates; for the
    rectangular recursion ``v_spec.at(t)`` produces ``v_t`` from ``t``
    iterates."""

    init: InitLaw
    u_spec: NonlinearitySpec
    T: int
    v_spec: Optional[NonlinearitySpec] = None
    gamma: float = 1.0
    N: int = DEFAULT_N
    seed: int = 0
    deriv_mode: str = "closed_form"
    block_size: int = DEFAULT_BLOCK
    require_nonsingular: bool = False

    def __post_init__(self):
        if self.T < 0:
            raise ModelError("horizon T must be nonnegative")
        if self.deriv_mode not in DERIV_MODES:
            raise ModelError(f"deriv_mode must be one of {DERIV_MODES}")
        if self.N < 2:
            raise ModelError("need at least two Monte Carlo samples")
        if self.gamma <= 0:
            raise ModelError("gamma must be positive")


@dataclass
class SEResult:
    """Covariances and Onsager coefficients up to horizon ``T``.

    ``Sigma`` is the ``T x T`` matrix whose upper-left ``t x t`` block is the
    step-``t`` covariance.  ``b[t-1, s-1]`` is ``b_ts``.  Rectangular results
    also carry ``Omega`` and ``a``.  ``*_se`` hold Monte Carlo standard errors.
    """

    kind: str
    T: int
    Sigma: np.ndarray
    Sigma_se: np.ndarray
    b: np.ndarray
    b_se: np.ndarray
    Omega: Optional[np.ndarray] = None
    Omega_se: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None
    a_se: Optional[np.ndarray] = None
    gamma: Optional[float] = None
    N: int = 0
    seed: int = 0
    deriv_mode: str = "closed_form"
    samples: dict = field(default_factory=dict, repr=False, compare=False)

    def sigma(self, t: int) -> np.ndarray:
        return self.Sigma[:t, :t]

    def omega(self, t: int) -> np.ndarray:
        return self.Omega[:t, :t]

    def to_dict(self) -> dict:
        def mat(x):
            return None if x is None else np.asarray(x, dtype=np.float64).tolist()

        return {
            "kind": self.kind, "T": self.T, "N": self.N, "seed": self.seed,
            "deriv_mode": self.deriv_mode, "gamma": self.gamma,
            "Sigma": mat(self.Sigma), "Sigma_se": mat(self.Sigma_se),
            "b": mat(self.b), "b_se": mat(self.b_se),
            "Omega": mat(self.Omega), "Omega_se": mat(self.Omega_se),
            "a": mat(self.a), "a_se": mat(self.a_se),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "SEResult":
        def arr(x, T):
            return None if x is None else np.asarray(x, dtype=np.float64).reshape(T, T)

        T = int(d["T"])
        return cls(
            kind=d["kind"], T=T, N=d.get("N", 0), seed=d.get("seed", 0),
            deriv_mode=d.get("deriv_mode", "closed_form"), gamma=d.get("gamma"),
            Sigma=arr(d["Sigma"], T), Sigma_se=arr(d["Sigma_se"], T),
            b=arr(d["b"], T), b_se=arr(d["b_se"], T),
            Omega=arr(d.get("Omega"), T), Omega_se=arr(d.get("Omega_se"), T),
            a=arr(d.get("a"), T), a_se=arr(d.get("a_se"), T),
        )

    @classmethod
    def from_json(cls, text: str) -> "SEResult":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------- helpers


class _Blocks:
    """Per-block generators; every draw concatenates the blocks in order."""

    def __init__(self, N: int, block_size: int, seed: int, side: int):
        self.sizes = [min(block_size, N - s) for s in range(0, N, block_size)]
        self.rngs = [make_rng(seed, STREAM_SE, side, b) for b in range(len(self.sizes))]

    def draw(self, fn: Callable):
        parts = [fn(sz, r) for sz, r in zip(self.sizes, self.rngs)]
        if isinstance(parts[0], tuple):
            return tuple(np.concatenate(p, axis=0) for p in zip(*parts))
        return np.concatenate(parts, axis=0)


def _psd_fix(S: np.ndarray) -> np.ndarray:
    S = 0.5 * (S + S.T)
    if S.size == 0:
        return S
    w, V = np.linalg.eigh(S)
    if w.min() < 0 and w.min() > -PSD_CLIP:
        S = (V * np.clip(w, 0, None)) @ V.T
        S = 0.5 * (S + S.T)
    return S


def _check_cov(S: np.ndarray, name: str, require_nonsingular: bool):
    w = np.linalg.eigvalsh(S)
    if w.min() < -PSD_CLIP * max(1.0, abs(w).max()):
        raise SingularCovarianceError(f"{name} is not positive semidefinite (min eigenvalue {w.min():.3g})")
    if require_nonsingular:
        if w.min() <= 0 or w.max() / w.min() > COND_LIMIT:
            raise SingularCovarianceError(f"{name} is numerically singular (eigenvalues {w})")


def _next_gaussian_column(prev: np.ndarray, S: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Column ``t`` of a ``N(0, S)`` sample given columns ``1..t-1``."""
    t = S.shape[0]
    if t == 1:
        return np.sqrt(max(S[0, 0], 0.0)) * xi
    A = S[: t - 1, : t - 1]
    c = S[t - 1, : t - 1]
    beta = np.linalg.pinv(A, hermitian=True) @ c
    var = max(S[t - 1, t - 1] - c @ beta, 0.0)
    return prev @ beta + np.sqrt(var) * xi


def _mean_se(x: np.ndarray):
    return float(np.mean(x)), float(np.std(x, ddof=1) / np.sqrt(x.shape[0]))


def _derivative_samples(func, Zs, F, cov, mode):
    """Per-sample estimators of ``E[d_s func(Zs, F)]`` for every column ``s``.

    ``stein`` uses ``E[grad] = cov^{-1} E[Zs * func]`` (Gaussian ``Zs``
    independent of ``F``)."""
    if mode == "stein":
        vals = func(Zs, F)
        return (Zs * vals[:, None]) @ np.linalg.pinv(cov, hermitian=True)
    return func.partials(Zs, F, mode)


# ---------------------------------------------------------------- GOE


def se_goe(model: SEModel) -> SEResult:
    """Symmetric recursion: ``Sigma_1 = E[U_1^2]``, ``Sigma_{t+1}[r, s] =
    E[U_r U_s]`` and ``b_ts = E[d_s u_t(Z_{1:t-1}, F)]`` with ``b_tt = 0``."""
    T, N = model.T, model.N
    Sig = np.zeros((T, T))
    Sig_se = np.zeros((T, T))
    b = np.zeros((T, T))
    b_se = np.zeros((T, T))
    if T == 0:
        return SEResult("goe", 0, Sig, Sig_se, b, b_se, N=N, seed=model.seed, deriv_mode=model.deriv_mode)
    blocks = _Blocks(N, model.block_size, model.seed, 0)
    U1, F = blocks.draw(lambda sz, r: model.init.sample_u(sz, r))
    U = np.empty((N, T))
    Z = np.empty((N, T))
    U[:, 0] = U1
    Sig[0, 0], Sig_se[0, 0] = _mean_se(U1 * U1)
    for t in range(1, T + 1):  # draw Z_t, then build U_{t+1}
        S = _psd_fix(Sig[:t, :t])
        Sig[:t, :t] = S
        _check_cov(S, f"Sigma_{t}", model.require_nonsingular)
        xi = blocks.draw(lambda sz, r: r.standard_normal(sz))
        Z[:, t - 1] = _next_gaussian_column(Z[:, : t - 1], S, xi)
        if t == T:
            break
        func = model.u_spec.at(t)
        U[:, t] = func(Z[:, :t], F)
        D = _derivative_samples(func, Z[:, :t], F, S, model.deriv_mode)
        for s in range(t):
            b[t, s], b_se[t, s] = _mean_se(D[:, s])
        for r in range(t + 1):
            Sig[t, r], Sig_se[t, r] = _mean_se(U[:, t] * U[:, r])
            Sig[r, t], Sig_se[r, t] = Sig[t, r], Sig_se[t, r]
    Sig = _psd_fix(Sig)
    _check_cov(Sig, f"Sigma_{T}", model.require_nonsingular)
    return SEResult("goe", T, Sig, Sig_se, b, b_se, N=N, seed=model.seed, deriv_mode=model.deriv_mode,
                    samples={"U": U, "Z": Z, "F": F})


# ---------------------------------------------------------------- white noise


def se_whitenoise(model: SEModel) -> SEResult:
    """Rectangular recursion with ``gamma = m/n``:

    ``Omega_1 = gamma E[U_1^2]``, ``Sigma_t[r, s] = E[V_r V_s]``,
    ``Omega_{t+1}[r, s] = gamma E[U_r U_s]``, ``a_ts = E[d_s v_t(Z_{1:t}, G)]``
    and ``b_ts = gamma E[d_s u_t(Y_{1:t-1}, F)]``.
    """
    if model.v_spec is None:
        raise ModelError("the rectangular recursion needs v_spec")
    T, N, g = model.T, model.N, float(model.gamma)
    Om, Om_se = np.zeros((T, T)), np.zeros((T, T))
    Sig, Sig_se = np.zeros((T, T)), np.zeros((T, T))
    a, a_se = np.zeros((T, T)), np.zeros((T, T))
    b, b_se = np.zeros((T, T)), np.zeros((T, T))

    def result(samples):
        return SEResult("whitenoise", T, Sig, Sig_se, b, b_se, Om, Om_se, a, a_se, gamma=g, N=N,
                        seed=model.seed, deriv_mode=model.deriv_mode, samples=samples)

    if T == 0:
        return result({})
    mblocks = _Blocks(N, model.block_size, model.seed, 0)  # U, F, Y side
    nblocks = _Blocks(N, model.block_size, model.seed, 1)  # V, G, Z side
    U1, F = mblocks.draw(lambda sz, r: model.init.sample_u(sz, r))
    G = nblocks.draw(lambda sz, r: model.init.sample_g(sz, r))
    U, Y = np.empty((N, T)), np.empty((N, T))
    V, Z = np.empty((N, T)), np.empty((N, T))
    U[:, 0] = U1
    m_, s_ = _mean_se(U1 * U1)
    Om[0, 0], Om_se[0, 0] = g * m_, g * s_
    for t in range(1, T + 1):
        O = _psd_fix(Om[:t, :t])
        Om[:t, :t] = O
        _check_cov(O, f"Omega_{t}", model.require_nonsingular)
        xi = nblocks.draw(lambda sz, r: r.standard_normal(sz))
        Z[:, t - 1] = _next_gaussian_column(Z[:, : t - 1], O, xi)
        vf = model.v_spec.at(t)
        V[:, t - 1] = vf(Z[:, :t], G)
        D = _derivative_samples(vf, Z[:, :t], G, O, model.deriv_mode)
        for s in range(t):
            a[t - 1, s], a_se[t - 1, s] = _mean_se(D[:, s])
        for r in range(t):
            Sig[t - 1, r], Sig_se[t - 1, r] = _mean_se(V[:, t - 1] * V[:, r])
            Sig[r, t - 1], Sig_se[r, t - 1] = Sig[t - 1, r], Sig_se[t - 1, r]
        S = _psd_fix(Sig[:t, :t])
        Sig[:t, :t] = S
        _check_cov(S, f"Sigma_{t}", model.require_nonsingular)
        xi = mblocks.draw(lambda sz, r: r.standard_normal(sz))
        Y[:, t - 1] = _next_gaussian_column(Y[:, : t - 1], S, xi)
        if t == T:
            break
        uf = model.u_spec.at(t)
        U[:, t] = uf(Y[:, :t], F)
        D = _derivative_samples(uf, Y[:, :t], F, S, model.deriv_mode)
        for s in range(t):
            m_, s_ = _mean_se(D[:, s])
            b[t, s], b_se[t, s] = g * m_, g * s_
        for r in range(t + 1):
            m_, s_ = _mean_se(U[:, t] * U[:, r])
            Om[t, r], Om_se[t, r] = g * m_, g * s_
            Om[r, t], Om_se[r, t] = Om[t, r], Om_se[t, r]
    return result({"U": U, "Y": Y, "F": F, "V": V, "Z": Z, "G": G})


# ---------------------------------------------------------------- quadrature


def se_goe_diagonal_quadrature(fn: Callable, sigma1: float, T: int, order: int = 80):
    """Diagonal of the symmetric recursion for ``u_{t+1} = fn(z_t)`` with no
    side information, by Gauss-Hermite quadrature.

    Returns ``(diag, b_sub)`` where ``diag[t-1] = Sigma_t[t, t]`` and
    ``b_sub[t-1] = b_{t+1, t} = E[fn'(Z_t)]`` (by Stein's identity).  This is
    a deterministic cross-check of the Monte Carlo diagonal.
    """
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    diag = [float(sigma1)]
    b_sub = []
    for _ in range(1, T):
        s = np.sqrt(diag[-1])
        vals = fn(s * x)
        diag.append(float(np.sum(w * vals * vals)))
        b_sub.append(float(np.sum(w * x * vals) / s) if s > 0 else 0.0)
    return np.array(diag), np.array(b_sub)
