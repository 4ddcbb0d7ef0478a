"""Limit laws for eigenvalues and singular values.

A :class:`SpectralSpec` is either a closed-form law or an explicit vector of
values.  Besides sampling it exposes the moment map ``k -> E[D^k]``.

The Marchenko-Pastur law here is the law of squared singular values of an
``m x n`` white-noise matrix with entry variance ``1/n`` and ``gamma = m/n``:
density ``sqrt((b - x)(x - a)) / (2 pi gamma x)`` on ``[a, b]`` with
``a, b = (1 -+ sqrt(gamma))**2`` plus an atom of mass ``1 - 1/gamma`` at zero
when ``gamma > 1``.  ``SpectralSpec.marchenko_pastur(gamma)`` describes the
*singular values* ``D``, i.e. ``D**2`` follows that law, so ``E[D^2] = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

KINDS = ("semicircle", "marchenko_pastur", "symmetric_two_point", "uniform", "constant", "explicit")


def catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


def _mp_edges(gamma: float) -> tuple[float, float]:
    s = math.sqrt(gamma)
    return (1.0 - s) ** 2, (1.0 + s) ** 2


def _mp_theta_density(theta, gamma):
    # density of the continuous part in the variable theta, where
    # x = (a + b)/2 - (b - a)/2 cos(theta); the sqrt singularities cancel
    a, b = _mp_edges(gamma)
    half = 0.5 * (b - a)
    x = 0.5 * (a + b) - half * np.cos(theta)
    num = (half * np.sin(theta)) ** 2
    # at gamma = 1 the left edge is x = 0, where the ratio tends to b - a
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, num / safe, b - a) / (2.0 * np.pi * gamma)


@lru_cache(maxsize=256)
def mp_moment(k: float, gamma: float) -> float:
    """``E[L^k]`` for ``L ~ MP(gamma)``, ``k`` real and ``>= 0``.

    Computed by adaptive quadrature in the angle variable; the atom at zero
    contributes only to ``k = 0``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if k == 0:
        return 1.0
    a, b = _mp_edges(gamma)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)

    def integrand(theta):
        x = mid - half * math.cos(theta)
        return x ** k * _mp_theta_density(theta, gamma)

    val, _err = integrate.quad(integrand, 0.0, math.pi, epsabs=1e-14, epsrel=1e-13, limit=200)
    return float(val)


@lru_cache(maxsize=32)
def _mp_inverse_cdf_table(gamma: float, grid: int = 1 << 15):
    theta = np.linspace(0.0, np.pi, grid + 1)
    dens = _mp_theta_density(theta, gamma)
    cdf = integrate.cumulative_trapezoid(dens, theta, initial=0.0)
    cdf /= cdf[-1]
    a, b = _mp_edges(gamma)
    x = 0.5 * (a + b) - 0.5 * (b - a) * np.cos(theta)
    return cdf, x


def mp_quantiles(probs, gamma: float) -> np.ndarray:
    """Quantiles of the continuous part of the Marchenko-Pastur law of
    ``D^2`` (mean 1) at the given probabilities."""
    cdf, x = _mp_inverse_cdf_table(float(gamma))
    return np.interp(np.asarray(probs, dtype=np.float64), cdf, x)


@dataclass(frozen=True, eq=False)
class SpectralSpec:
    """A compactly supported law ``D`` with sampler and moments.

    ``params`` depends on ``kind``: ``gamma`` (marchenko_pastur), ``a``
    (symmetric_two_point), ``a, b`` (uniform), ``c`` (constant) and
    ``values`` (explicit).  Semicircle is the standard law on ``[-2, 2]``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown spectral law {self.kind!r}")
        p = dict(self.params)
        if self.kind == "marchenko_pastur" and not p.get("gamma", 0) > 0:
            raise ValueError("marchenko_pastur needs gamma > 0")
        if self.kind == "uniform" and not p["a"] < p["b"]:
            raise ValueError("uniform needs a < b")
        if self.kind == "explicit":
            v = np.sort(np.asarray(p["values"], dtype=np.float64))
            if v.ndim != 1 or v.size == 0 or not np.all(np.isfinite(v)):
                raise ValueError("explicit law needs a finite nonempty vector")
            v.setflags(write=False)
            p["values"] = v
        object.__setattr__(self, "params", p)

    # constructors ------------------------------------------------------
    @classmethod
    def semicircle(cls):
        return cls("semicircle")

    @classmethod
    def marchenko_pastur(cls, gamma: float):
        return cls("marchenko_pastur", {"gamma": float(gamma)})

    @classmethod
    def symmetric_two_point(cls, a: float = 1.0):
        return cls("symmetric_two_point", {"a": float(a)})

    @classmethod
    def uniform(cls, a: float, b: float):
        return cls("uniform", {"a": float(a), "b": float(b)})

    @classmethod
    def constant(cls, c: float):
        return cls("constant", {"c": float(c)})

    @classmethod
    def explicit(cls, values):
        return cls("explicit", {"values": values})

    # moments -------------------------------------------------------------
    def moment(self, k: int) -> float:
        """``E[D^k]`` for integer ``k >= 0``."""
        k = int(k)
        if k < 0:
            raise ValueError("moment order must be nonnegative")
        if k == 0:
            return 1.0
        kind, p = self.kind, self.params
        if kind == "semicircle":
            return float(catalan(k // 2)) if k % 2 == 0 else 0.0
        if kind == "marchenko_pastur":
            # D = sqrt(L): E[D^k] = E[L^(k/2)]
            return mp_moment(k / 2.0, p["gamma"])
        if kind == "symmetric_two_point":
            return p["a"] ** k if k % 2 == 0 else 0.0
        if kind == "uniform":
            a, b = p["a"], p["b"]
            return (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * (b - a))
        if kind == "constant":
            return p["c"] ** k
        return float(np.mean(p["values"] ** k))

    def moments(self, kmax: int) -> np.ndarray:
        return np.array([self.moment(k) for k in range(kmax + 1)])

    def variance(self) -> float:
        return self.moment(2) - self.moment(1) ** 2

    def support(self) -> tuple[float, float]:
        kind, p = self.kind, self.params
        if kind == "semicircle":
            return (-2.0, 2.0)
        if kind == "marchenko_pastur":
            a, b = _mp_edges(p["gamma"])
            lo = 0.0 if p["gamma"] > 1 else math.sqrt(a)
            return (lo, math.sqrt(b))
        if kind == "symmetric_two_point":
            return (-abs(p["a"]), abs(p["a"]))
        if kind == "uniform":
            return (p["a"], p["b"])
        if kind == "constant":
            return (p["c"], p["c"])
        return (float(p["values"][0]), float(p["values"][-1]))

    # sampling ------------------------------------------------------------
    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """``size`` i.i.d. draws (explicit laws return their vector).

        For the Marchenko-Pastur law the draws come from the continuous
        part only, since a rectangular diagonal of length ``min(m, n)``
        already carries the zero atom through padding.
        """
        kind, p = self.kind, self.params
        if kind == "semicircle":
            return 4.0 * rng.beta(1.5, 1.5, size=size) - 2.0
        if kind == "marchenko_pastur":
            cdf, x = _mp_inverse_cdf_table(p["gamma"])
            lam = np.interp(rng.random(size), cdf, x)
            return np.sqrt(lam)
        if kind == "symmetric_two_point":
            return p["a"] * rng.choice(np.array([-1.0, 1.0]), size=size)
        if kind == "uniform":
            return rng.uniform(p["a"], p["b"], size=size)
        if kind == "constant":
            return np.full(size, p["c"])
        v = p["values"]
        if v.size != size:
            raise ValueError(f"explicit law has {v.size} values but {size} were requested")
        return np.array(v)

    # serialization ---------------------------------------------------------
    def to_dict(self) -> dict:
        p = dict(self.params)
        if "values" in p:
            p["values"] = [float(x) for x in p["values"]]
        return {"kind": self.kind, "params": p}

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralSpec":
        return cls(d["kind"], dict(d.get("params", {})))
