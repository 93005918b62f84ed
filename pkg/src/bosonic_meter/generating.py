"""Gaussian generating functions K_{ll'}(t; X) and the moments they encode.

``X`` is either a mapping probe label -> value or a sequence aligned with
``kernels.probes``. Exponentials are ordered as the probes are listed.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .kernels import TimeKernels

MAX_MOMENT_ORDER = 8


@dataclass(frozen=True)
class GeneratingPoint:
    t: float
    X: tuple[float, ...]
    level_pair: tuple[int, int]

    def __post_init__(self):
        X = tuple(float(x) for x in self.X)
        if not np.all(np.isfinite(X)):
            raise ValueError("X must be finite")
        if not self.t >= 0:
            raise ValueError("t must be >= 0")
        object.__setattr__(self, "X", X)

    def evaluate(self, kernels: TimeKernels) -> complex:
        return generating(kernels, *self.level_pair, self.t, self.X)


def _as_vector(kernels: TimeKernels, X) -> np.ndarray:
    if X is None:
        return np.zeros(len(kernels.probes))
    if isinstance(X, Mapping):
        vec = np.zeros(len(kernels.probes))
        for label, x in X.items():
            vec[kernels.probe_index(label)] = x
        return vec
    vec = np.asarray(X, dtype=float).ravel()
    if vec.size != len(kernels.probes):
        raise KeyError(f"X has {vec.size} entries, kernels have {len(kernels.probes)} probes")
    return vec


def gaussian_data(kernels: TimeKernels, l1: int, l2: int, t: float):
    """(prefactor, b, M) with K = prefactor * exp(b.X - X.M.X / 2)."""
    it = kernels.t_index(t)
    A1, A2 = kernels.A[:, l1, it], kernels.A[:, l2, it]
    if l1 == l2:
        b = 2j * A1
        pref = 1.0 + 0.0j
    else:
        b = 1j * (A1 + A2) - kernels.B[:, l1, it] + kernels.B[:, l2, it]
        pref = kernels.F(l1, l2, t)
    C = kernels.C
    M = np.triu(C, 1)
    M = M + M.T + 2.0 * np.diag(np.diag(C))
    return pref, b.astype(complex), M


def K_offdiag(kernels: TimeKernels, l1: int, l2: int, t: float, X=None) -> complex:
    """F_{ll'}(t) exp(-sum_{a<=a'} X X C + sum X [i(A_l + A_l') - B_l + B_l'])."""
    if l1 == l2:
        raise ValueError("K_offdiag needs two different levels; use K_diag")
    return _evaluate(kernels, l1, l2, t, X)


def K_diag(kernels: TimeKernels, level: int, t: float, X=None) -> complex:
    """exp(2i sum X A_l - sum_{a<=a'} X X C)."""
    return _evaluate(kernels, level, level, t, X)


def generating(kernels: TimeKernels, l1: int, l2: int, t: float, X=None) -> complex:
    return _evaluate(kernels, l1, l2, t, X)


def _evaluate(kernels, l1, l2, t, X):
    x = _as_vector(kernels, X)
    pref, b, M = gaussian_data(kernels, l1, l2, t)
    return complex(pref * np.exp(b @ x - 0.5 * x @ M @ x))


def moment(
    kernels: TimeKernels,
    l1: int,
    l2: int,
    t: float,
    powers: Mapping[str, int] | Sequence[int],
) -> complex:
    """< e^{itH_l1} prod_a Pi_a^{n_a} e^{-itH_l2} > by exact differentiation of K."""
    if isinstance(powers, Mapping):
        n = [0] * len(kernels.probes)
        for label, k in powers.items():
            n[kernels.probe_index(label)] = int(k)
    else:
        n = [int(k) for k in powers]
    if any(k < 0 for k in n):
        raise ValueError("powers must be non-negative")
    order = sum(n)
    if order > MAX_MOMENT_ORDER:
        raise ValueError(f"moment order {order} exceeds {MAX_MOMENT_ORDER}")
    pref, b, M = gaussian_data(kernels, l1, l2, t)
    deriv = hermite_derivative(tuple(b), tuple(map(tuple, M)), tuple(n))
    return complex(pref * (-1j) ** order * deriv)


def hermite_derivative(b: tuple, M: tuple, n: tuple) -> complex:
    """d^n/dX^n of exp(b.X - X.M.X/2) at X = 0 (multivariate Hermite recursion)."""
    b_arr = np.asarray(b, dtype=complex)
    M_arr = np.asarray(M, dtype=complex)

    @lru_cache(maxsize=None)
    def D(idx: tuple) -> complex:
        if any(k < 0 for k in idx):
            return 0.0
        if not any(idx):
            return 1.0
        k = next(i for i, v in enumerate(idx) if v > 0)
        m = list(idx)
        m[k] -= 1
        m = tuple(m)
        val = b_arr[k] * D(m)
        for j, mj in enumerate(m):
            if mj:
                lower = list(m)
                lower[j] -= 1
                val -= M_arr[k, j] * mj * D(tuple(lower))
        return val

    return complex(D(tuple(n)))
