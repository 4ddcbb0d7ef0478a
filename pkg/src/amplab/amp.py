"""AMP iterations: symmetric, rectangular and the compressed-sensing form.

Symmetric::

    z_t = W u_t - sum_{s<t} b_ts u_s,      u_{t+1} = u_{t+1}(z_{1:t}, f)

Rectangular (``W`` is ``m x n``)::

    z_t = W^T u_t - sum_{s<t} b_ts v_s,    v_t = v_t(z_{1:t}, g)
    y_t = W v_t  - sum_{s<=t} a_ts u_s,    u_{t+1} = u_{t+1}(y_{1:t}, f)

Coefficients come either from a state-evolution result ("prescribed") or
from empirical averages of the derivatives of the nonlinearities
("empirical").
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize, stats

from .fastops import MatrixOperator, apply_operator, is_power_of_two
from .nonlinear import NonlinearitySpec, soft_threshold
from .stateevo import SEResult

DIVERGENCE_FACTOR = 1e8
COEF_MODES = ("prescribed", "empirical")


class AmpDivergence(RuntimeError):
    pass


@dataclass
class AmpConfig:
    op: MatrixOperator
    u1: np.ndarray
    u_spec: NonlinearitySpec
    T: int
    F: Optional[np.ndarray] = None
    v_spec: Optional[NonlinearitySpec] = None
    G: Optional[np.ndarray] = None
    mode: str = "empirical"
    se: Optional[SEResult] = None
    deriv_mode: str = "closed_form"

    def __post_init__(self):
        self.u1 = np.asarray(self.u1, dtype=np.float64)
        m = self.op.shape[0]
        if self.u1.shape != (m,):
            raise ValueError(f"u1 has shape {self.u1.shape}, operator has {m} rows")
        self.F = np.zeros((m, 0)) if self.F is None else np.asarray(self.F, dtype=np.float64).reshape(m, -1)
        if self.G is not None:
            self.G = np.asarray(self.G, dtype=np.float64).reshape(self.op.shape[1], -1)
        if self.mode not in COEF_MODES:
            raise ValueError(f"mode must be one of {COEF_MODES}")
        if self.mode == "prescribed":
            if self.se is None:
                raise ValueError("prescribed mode needs an SEResult")
            if self.se.T < self.T:
                raise ValueError(f"SEResult horizon {self.se.T} is shorter than T={self.T}")
        if self.T < 0:
            raise ValueError("T must be nonnegative")


@dataclass
class AmpTrajectory:
    """Iterates as columns: ``z[:, t-1]`` is ``z_t`` and ``u[:, t-1]`` is
    ``u_t``.  ``b`` (and ``a``) hold the coefficients actually used."""

    kind: str
    z: np.ndarray
    u: np.ndarray
    b: np.ndarray
    F: np.ndarray
    seconds: list = field(default_factory=list)
    v: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None
    G: Optional[np.ndarray] = None

    @property
    def T(self) -> int:
        return self.z.shape[1]

    def second_moments(self) -> dict:
        out = {"z": np.mean(self.z ** 2, axis=0).tolist()}
        if self.y is not None:
            out["y"] = np.mean(self.y ** 2, axis=0).tolist()
        return out

    def summary(self) -> dict:
        d = {"kind": self.kind, "T": self.T, "second_moments": self.second_moments(),
             "b": self.b.tolist(), "seconds": list(self.seconds)}
        if self.a is not None:
            d["a"] = self.a.tolist()
        return d

    def rows(self):
        """Column labels and the joint ``(n, d)`` matrix of ``u_1``, side
        columns and the Gaussian iterates (``z`` for the symmetric case;
        ``y`` on the ``m`` side for the rectangular case)."""
        if self.kind == "sym":
            cols = [self.u[:, 0]] + [self.F[:, j] for j in range(self.F.shape[1])] + \
                   [self.z[:, t] for t in range(self.T)]
            labels = ["u1"] + [f"f{j + 1}" for j in range(self.F.shape[1])] + \
                     [f"z{t + 1}" for t in range(self.T)]
        else:
            cols = [self.u[:, 0]] + [self.F[:, j] for j in range(self.F.shape[1])] + \
                   [self.y[:, t] for t in range(self.T)]
            labels = ["u1"] + [f"f{j + 1}" for j in range(self.F.shape[1])] + \
                     [f"y{t + 1}" for t in range(self.T)]
        return labels, np.column_stack(cols)


def _check_finite(x: np.ndarray, name: str, t: int):
    if not np.all(np.isfinite(x)):
        raise AmpDivergence(f"non-finite entries in {name}_{t}")
    limit = DIVERGENCE_FACTOR * math.sqrt(x.shape[0])
    norm = float(np.linalg.norm(x))
    if norm > limit:
        raise AmpDivergence(f"||{name}_{t}|| = {norm:.3g} exceeds {limit:.3g}")


def amp_run_sym(cfg: AmpConfig) -> AmpTrajectory:
    op = cfg.op
    n = op.shape[0]
    if op.shape != (n, n):
        raise ValueError("symmetric AMP needs a square operator")
    T = cfg.T
    U = np.empty((n, T + 1))
    Z = np.empty((n, T))
    b = np.zeros((T, T))
    U[:, 0] = cfg.u1
    seconds = []
    for t in range(1, T + 1):
        t0 = time.perf_counter()
        if t >= 2:
            if cfg.mode == "prescribed":
                b[t - 1, : t - 1] = cfg.se.b[t - 1, : t - 1]
            else:
                D = cfg.u_spec.at(t - 1).partials(Z[:, : t - 1], cfg.F, cfg.deriv_mode)
                b[t - 1, : t - 1] = D.mean(axis=0)
        z = apply_operator(op, U[:, t - 1]) - U[:, : t - 1] @ b[t - 1, : t - 1]
        _check_finite(z, "z", t)
        Z[:, t - 1] = z
        U[:, t] = cfg.u_spec.at(t)(Z[:, :t], cfg.F)
        _check_finite(U[:, t], "u", t + 1)
        seconds.append(time.perf_counter() - t0)
    return AmpTrajectory("sym", Z, U, b, cfg.F, seconds)


def amp_run_rect(cfg: AmpConfig) -> AmpTrajectory:
    if cfg.v_spec is None:
        raise ValueError("rectangular AMP needs v_spec")
    op = cfg.op
    m, n = op.shape
    gamma = m / n
    G = np.zeros((n, 0)) if cfg.G is None else cfg.G
    T = cfg.T
    U, Y = np.empty((m, T + 1)), np.empty((m, T))
    V, Z = np.empty((n, T)), np.empty((n, T))
    a, b = np.zeros((T, T)), np.zeros((T, T))
    U[:, 0] = cfg.u1
    seconds = []
    for t in range(1, T + 1):
        t0 = time.perf_counter()
        if t >= 2:
            if cfg.mode == "prescribed":
                b[t - 1, : t - 1] = cfg.se.b[t - 1, : t - 1]
            else:
                D = cfg.u_spec.at(t - 1).partials(Y[:, : t - 1], cfg.F, cfg.deriv_mode)
                b[t - 1, : t - 1] = gamma * D.mean(axis=0)
        z = apply_operator(op, U[:, t - 1], transpose=True) - V[:, : t - 1] @ b[t - 1, : t - 1]
        _check_finite(z, "z", t)
        Z[:, t - 1] = z
        vf = cfg.v_spec.at(t)
        V[:, t - 1] = vf(Z[:, :t], G)
        if cfg.mode == "prescribed":
            a[t - 1, :t] = cfg.se.a[t - 1, :t]
        else:
            a[t - 1, :t] = vf.partials(Z[:, :t], G, cfg.deriv_mode).mean(axis=0)
        y = apply_operator(op, V[:, t - 1]) - U[:, :t] @ a[t - 1, :t]
        _check_finite(y, "y", t)
        Y[:, t - 1] = y
        U[:, t] = cfg.u_spec.at(t)(Y[:, :t], cfg.F)
        _check_finite(U[:, t], "u", t + 1)
        seconds.append(time.perf_counter() - t0)
    return AmpTrajectory("rect", Z, U, b, cfg.F, seconds, v=V, y=Y, a=a, G=G)


# ---------------------------------------------------------------- compressed sensing


@dataclass
class CSTrajectory:
    """``x[t]`` is ``x_{t+1}`` (so ``x[0] = 0``); per-step MSE and relative
    error are against ``x_true`` when given, one value per batch column.
    ``diverged`` flags columns stopped by the divergence guard."""

    x: np.ndarray
    z: np.ndarray
    thresholds: np.ndarray
    onsager: np.ndarray
    mse: Optional[np.ndarray] = None
    rel_err: Optional[np.ndarray] = None
    diverged: Optional[np.ndarray] = None

    @property
    def final(self) -> np.ndarray:
        return self.x[-1]


def amp_run_cs(op: MatrixOperator, y, thresholds=None, T: int = 30, x_true=None,
               alpha=None, keep_history: bool = False, on_divergence: str = "raise") -> CSTrajectory:
    """Soft-threshold AMP for ``y = W x + noise``.

    ``z_t = y - W x_t + b_t z_{t-1}`` and ``x_{t+1} = eta_t(W^T z_t + x_t)``
    with ``b_t = (n/m) <eta_{t-1}'>``, which equals ``||x_t||_0 / m``.
    Thresholds are either a fixed schedule (scalar or length-``T``) or
    adaptive, ``theta_t = alpha ||z_t|| / sqrt(m)`` per column.  ``y`` may be
    ``(m,)`` or ``(m, B)``; columns are independent problems sharing ``W``.

    With ``on_divergence="mark"`` a column whose ``z`` or ``x`` leaves the
    divergence bound is frozen at zero and reported with infinite error
    instead of aborting the whole batch.
    """
    m, n = op.shape
    y = np.asarray(y, dtype=np.float64)
    single = y.ndim == 1
    Y = y[:, None] if single else y
    B = Y.shape[1]
    if Y.shape[0] != m:
        raise ValueError(f"y has {Y.shape[0]} rows, operator has {m}")
    if m == 0:
        raise ValueError("no measurements")
    if on_divergence not in ("raise", "mark"):
        raise ValueError("on_divergence must be 'raise' or 'mark'")
    if (thresholds is None) == (alpha is None):
        raise ValueError("give exactly one of thresholds or alpha")
    if thresholds is not None:
        sched = np.broadcast_to(np.asarray(thresholds, dtype=np.float64), (T,)) if np.ndim(thresholds) == 0 \
            else np.asarray(thresholds, dtype=np.float64)
        if sched.shape[0] < T or np.any(sched < 0):
            raise ValueError("threshold schedule must be nonnegative with at least T entries")
    Xt = None if x_true is None else np.asarray(x_true, dtype=np.float64).reshape(n, -1)
    x = np.zeros((n, B))
    z_prev = np.zeros((m, B))
    xs = [x.copy()] if keep_history else []
    zs = []
    thetas = np.zeros((T, B))
    ons = np.zeros((T, B))
    mse = np.zeros((T, B)) if Xt is not None else None
    rel = np.zeros((T, B)) if Xt is not None else None
    diverged = np.zeros(B, dtype=bool)
    for t in range(T):
        bt = np.count_nonzero(x, axis=0) / m
        ons[t] = bt
        z = Y - apply_operator(op, x) + bt[None, :] * z_prev
        z[:, diverged] = 0.0
        z = _guard_columns(z, "z", t + 1, diverged, on_divergence)
        theta = sched[t] * np.ones(B) if alpha is None else alpha * np.linalg.norm(z, axis=0) / math.sqrt(m)
        thetas[t] = theta
        x = soft_threshold(apply_operator(op, z, transpose=True) + x, theta[None, :])
        x[:, diverged] = 0.0
        x = _guard_columns(x, "x", t + 2, diverged, on_divergence)
        z_prev = z
        if keep_history:
            xs.append(x.copy())
            zs.append(z.copy())
        if Xt is not None:
            err = np.sum((x - Xt) ** 2, axis=0)
            mse[t] = err / n
            den = np.sum(Xt ** 2, axis=0)
            rel[t] = np.sqrt(err / np.where(den > 0, den, 1.0))
            mse[t, diverged] = rel[t, diverged] = np.inf
    if not keep_history:
        xs, zs = [x], [z_prev]
    X = np.stack(xs)
    Zh = np.stack(zs) if zs else np.zeros((0, m, B))
    if single:
        X, Zh = X[..., 0], Zh[..., 0]
    return CSTrajectory(X, Zh, thetas, ons, mse, rel, diverged)


def _guard_columns(a: np.ndarray, name: str, t: int, diverged: np.ndarray, mode: str) -> np.ndarray:
    """Divergence check per column; ``mode="mark"`` records offending columns
    in ``diverged`` and zeroes them, ``"raise"`` raises ``AmpDivergence``."""
    if mode == "raise":
        _check_finite(a.ravel(), name, t)
        return a
    with np.errstate(over="ignore", invalid="ignore"):
        norms = np.linalg.norm(a, axis=0)
    bad = ~np.isfinite(norms) | (norms > DIVERGENCE_FACTOR * math.sqrt(a.shape[0]))
    if np.any(bad):
        diverged |= bad
        a[:, bad] = 0.0
    return a


def _dt_objective(zv: float, delta: float) -> float:
    phi, Phi = stats.norm.pdf(zv), stats.norm.cdf(-zv)
    g = (1 + zv * zv) * Phi - zv * phi
    return (1 - 2 * g / delta) / (1 + zv * zv - 2 * g)


def donoho_tanner(delta: float):
    """Soft-threshold AMP phase transition ``rho(delta)`` and the minimax
    threshold multiplier ``alpha(delta)`` attaining it."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    res = optimize.minimize_scalar(lambda zv: -_dt_objective(zv, delta), bounds=(0.0, 10.0),
                                   method="bounded", options={"xatol": 1e-10})
    return float(-res.fun), float(res.x)


def bernoulli_gauss(n: int, eps: float, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """``(n, size)`` signal with i.i.d. entries ``N(0,1)`` w.p. ``eps``, else 0."""
    mask = rng.random((n, size)) < eps
    return np.where(mask, rng.standard_normal((n, size)), 0.0)


def cs_sensing_operator(kind: str, m: int, n: int, seed: int) -> MatrixOperator:
    """Unit-column-norm sensing matrices.

    ``gaussian``: i.i.d. ``N(0, 1/m)`` entries.  ``hadamard``: the
    rectangular invariant ensemble with Marchenko-Pastur singular values and
    fast transforms (Hadamard where the dimension is a power of 2, DCT-II
    otherwise), scaled by ``sqrt(n/m)`` to match.
    """
    from .ensembles import RectEnsembleSpec, sample_rectangular
    from .fastops import DenseOperator, ImplicitOperator, ScaleFactor
    from .rng import make_rng
    from .spectral import SpectralSpec

    if kind == "gaussian":
        rng = make_rng(seed)
        return DenseOperator(rng.standard_normal((m, n)) / math.sqrt(m))
    if kind == "hadamard":
        spec = RectEnsembleSpec(
            "RectInvariant", singular_value_law=SpectralSpec.marchenko_pastur(m / n),
            left_basis="hadamard" if is_power_of_two(m) else "dct2",
            right_basis="hadamard" if is_power_of_two(n) else "dct2",
        )
        base = sample_rectangular(spec, m, n, seed)
        return ImplicitOperator([ScaleFactor(math.sqrt(n / m), m)] + list(base.factors),
                                provenance=base.provenance, meta=base.meta)
    raise ValueError(f"unknown sensing kind {kind!r}")
