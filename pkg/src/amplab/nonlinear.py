"""Nonlinearities for AMP and state evolution.

A nonlinearity maps ``(Z, F)`` to a vector, where ``Z`` has shape
``(N, t)`` (the iterates so far, one column per iteration) and ``F`` has
shape ``(N, k)`` (side information).  It may provide closed-form partial
derivatives in its ``Z`` arguments; otherwise central finite differences
with step ``h`` are used.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

DERIV_MODES = ("closed_form", "finite_diff", "stein")


@dataclass
class Nonlinearity:
    fn: Callable
    grad: Optional[Callable] = None
    h: float = 1e-5
    lipschitz: bool = True
    name: str = "custom"

    def __call__(self, Z, F=None) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        if Z.ndim == 1:
            Z = Z[:, None]
        if F is None:
            F = np.zeros((Z.shape[0], 0))
        return np.asarray(self.fn(Z, F), dtype=np.float64)

    def partials(self, Z, F=None, mode: str = "closed_form") -> np.ndarray:
        """``(N, t)`` array of partial derivatives in each ``Z`` column.

        ``closed_form`` falls back to finite differences when no gradient
        is attached.
        """
        Z = np.asarray(Z, dtype=np.float64)
        if Z.ndim == 1:
            Z = Z[:, None]
        if F is None:
            F = np.zeros((Z.shape[0], 0))
        if mode == "closed_form" and self.grad is not None:
            return np.asarray(self.grad(Z, F), dtype=np.float64).reshape(Z.shape)
        if mode not in ("closed_form", "finite_diff"):
            raise ValueError(f"pointwise partials need closed_form or finite_diff, got {mode!r}")
        out = np.empty_like(Z)
        for s in range(Z.shape[1]):
            Zp = Z.copy()
            Zm = Z.copy()
            Zp[:, s] += self.h
            Zm[:, s] -= self.h
            out[:, s] = (self.fn(Zp, F) - self.fn(Zm, F)) / (2.0 * self.h)
        return out


@dataclass
class NonlinearitySpec:
    """Per-iteration nonlinearities; ``funcs[i]`` is used at step ``i + 1``
    and the last entry repeats for later steps."""

    funcs: Sequence[Nonlinearity] = field(default_factory=list)

    def __post_init__(self):
        if isinstance(self.funcs, Nonlinearity):
            self.funcs = [self.funcs]
        self.funcs = list(self.funcs)
        if not self.funcs:
            raise ValueError("NonlinearitySpec needs at least one function")

    def at(self, t: int) -> Nonlinearity:
        if t < 1:
            raise ValueError("steps are numbered from 1")
        return self.funcs[min(t, len(self.funcs)) - 1]


# ---------------------------------------------------------------- factories


def tanh_latest(scale: float = 1.0) -> Nonlinearity:
    """``tanh(scale * z_t)`` of the most recent iterate."""

    def fn(Z, F):
        return np.tanh(scale * Z[:, -1])

    def grad(Z, F):
        g = np.zeros_like(Z)
        g[:, -1] = scale / np.cosh(scale * Z[:, -1]) ** 2
        return g

    return Nonlinearity(fn, grad, name=f"tanh_latest({scale:g})")


def identity_latest() -> Nonlinearity:
    def fn(Z, F):
        return Z[:, -1].copy()

    def grad(Z, F):
        g = np.zeros_like(Z)
        g[:, -1] = 1.0
        return g

    return Nonlinearity(fn, grad, name="identity_latest")


def zero() -> Nonlinearity:
    return Nonlinearity(lambda Z, F: np.zeros(Z.shape[0]), lambda Z, F: np.zeros_like(Z), name="zero")


def soft_threshold(x, theta):
    return np.sign(x) * np.maximum(np.abs(x) - theta, 0.0)


def soft_threshold_latest(theta: float) -> Nonlinearity:
    """Soft threshold of the latest iterate; the derivative uses the
    almost-everywhere convention (0 at the kinks)."""

    def fn(Z, F):
        return soft_threshold(Z[:, -1], theta)

    def grad(Z, F):
        g = np.zeros_like(Z)
        g[:, -1] = (np.abs(Z[:, -1]) > theta).astype(np.float64)
        return g

    return Nonlinearity(fn, grad, lipschitz=True, name=f"soft_threshold({theta:g})")


def tanh_side(scale: float = 1.0, side_weight: float = 1.0) -> Nonlinearity:
    """``tanh(scale * z_t + side_weight * f_1)``: a latest-iterate
    nonlinearity that also reads the first side-information column."""

    def fn(Z, F):
        return np.tanh(scale * Z[:, -1] + side_weight * F[:, 0])

    def grad(Z, F):
        g = np.zeros_like(Z)
        g[:, -1] = scale / np.cosh(scale * Z[:, -1] + side_weight * F[:, 0]) ** 2
        return g

    return Nonlinearity(fn, grad, name=f"tanh_side({scale:g},{side_weight:g})")


NAMED = {
    "tanh_latest": tanh_latest,
    "identity_latest": identity_latest,
    "zero": zero,
    "soft_threshold_latest": soft_threshold_latest,
    "tanh_side": tanh_side,
}


def from_config(d) -> Nonlinearity:
    """``{"name": "tanh_latest", "params": {"scale": 1.0}}`` or a bare name."""
    if isinstance(d, str):
        return NAMED[d]()
    return NAMED[d["name"]](**d.get("params", {}))


def spec_from_config(items) -> NonlinearitySpec:
    if isinstance(items, (str, dict)):
        items = [items]
    return NonlinearitySpec([from_config(x) for x in items])
