"""Integration primitives for the kernel formulas.

The workhorse is a vectorised adaptive Gauss-Kronrod (7/15) integrator: each
refinement pass evaluates the integrand once on the nodes of every active
interval, so integrands must accept numpy arrays. Semi-infinite integrals are
split at a cutoff; the finite part is pre-partitioned into panels of length
pi/t for oscillatory factors and the tail is mapped onto [0, 1).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Literal

import numpy as np
from scipy import integrate as _sp_integrate

Weight = Literal["none", "inv_omega", "inv_omega_coth", "inv_omega_sq_coth"]

_EPS = np.finfo(float).eps

# Kronrod 15-point nodes on [-1, 1] (non-negative half) and weights; every
# odd-indexed node is also a 7-point Gauss node.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_W_K = np.concatenate([_WGK[:-1], _WGK[::-1]])
_W_G = np.zeros(15)
_W_G[1:7:2] = _WG[:3]
_W_G[7] = _WG[3]
_W_G[9:15:2] = _WG[2::-1]


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    # maximum number of bisection passes of the adaptive refinement
    max_subdivisions: int = 60
    oscillation_splitting: bool = True
    # split into pi/t panels only when the finite range spans this many
    min_oscillations: float = 4.0

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_SETTINGS = QuadratureSettings()


class QuadratureError(ArithmeticError):
    """Adaptive refinement did not reach the requested accuracy."""

    def __init__(self, message: str, value: complex, error: float):
        super().__init__(f"{message} (best estimate {value!r}, error bound {error:.3g})")
        self.value = value
        self.error = error


@dataclass(frozen=True)
class QuadResult:
    value: complex
    error: float
    n_intervals: int


def _gk_pass(f, a: np.ndarray, b: np.ndarray):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel())).reshape(x.shape)
    k = half * (fx @ _W_K)
    g = half * (fx @ _W_G)
    # QUADPACK-style error scaling
    fmean = (fx @ _W_K) / 2.0
    resasc = np.abs(half) * (np.abs(fx - fmean[:, None]) @ _W_K)
    resabs = np.abs(half) * (np.abs(fx) @ _W_K)
    diff = np.abs(k - g)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(
            resasc > 0, resasc * np.minimum(1.0, (200.0 * diff / resasc) ** 1.5), diff
        )
    err = np.maximum(scaled, 50.0 * _EPS * resabs)
    return k, err


def gauss_kronrod(
    f: Callable[[np.ndarray], np.ndarray],
    edges,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    *,
    raise_on_failure: bool = True,
) -> QuadResult:
    """Adaptive integral of a vectorised ``f`` over consecutive panels ``edges``."""
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    if a.size == 0:
        return QuadResult(0.0, 0.0, 0)
    done_val = 0.0 + 0.0j
    done_err = 0.0
    k, err = _gk_pass(f, a, b)
    total_len = float(np.sum(b - a))
    for _ in range(settings.max_subdivisions):
        value = done_val + k.sum()
        error = done_err + err.sum()
        tol = max(settings.rel_tol * abs(value), settings.abs_tol)
        if error <= tol:
            return QuadResult(_scalar(value), float(error), a.size)
        # intervals whose share of the error budget is exceeded get bisected
        budget = 0.5 * tol * (b - a) / total_len
        split = err > budget
        if not split.any():
            split = err >= err.max()
        done_val += k[~split].sum()
        done_err += err[~split].sum()
        a, b = a[split], b[split]
        m = 0.5 * (a + b)
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        if a.size > 2_000_000:
            break
        k, err = _gk_pass(f, a, b)
    value = _scalar(done_val + k.sum())
    error = float(done_err + err.sum())
    if error <= max(settings.rel_tol * abs(value), settings.abs_tol):
        return QuadResult(value, error, a.size)
    if raise_on_failure:
        raise QuadratureError("adaptive quadrature did not converge", value, error)
    return QuadResult(value, error, a.size)


def _scalar(v):
    v = complex(v)
    return v


def _coth_half(w: np.ndarray, temperature: float) -> np.ndarray:
    if temperature == 0.0:
        return np.ones_like(w)
    return 1.0 / np.tanh(w / (2.0 * temperature))


def omega_weight(w: np.ndarray, weight: Weight, temperature: float = 0.0) -> np.ndarray:
    if weight == "none":
        return np.ones_like(w)
    if weight == "inv_omega":
        return 1.0 / w
    if weight == "inv_omega_coth":
        return _coth_half(w, temperature) / w
    if weight == "inv_omega_sq_coth":
        return _coth_half(w, temperature) / w**2
    raise ValueError(f"unknown weight {weight!r}")


def _panels(lo: float, hi: float, t: float, settings: QuadratureSettings) -> np.ndarray:
    if settings.oscillation_splitting and t > 0:
        width = np.pi / t
        if (hi - lo) / width >= settings.min_oscillations:
            inner = np.arange(lo, hi, width)
            return np.append(inner, hi)
    return np.array([lo, hi])


def integrate_semi_infinite(
    f: Callable[[np.ndarray], np.ndarray],
    weight: Weight = "none",
    t: float = 0.0,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    *,
    temperature: float = 0.0,
    cutoff: float = 40.0,
    full_output: bool = False,
):
    """Integral of ``f(w) * weight(w)`` over w in (0, inf).

    ``t`` is the time entering any oscillatory factor of ``f``; it only
    controls panel splitting. Returns a complex number, or a ``QuadResult``
    when ``full_output`` is set.
    """
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")

    def g(w):
        return f(w) * omega_weight(w, weight, temperature)

    # head and tail share the error budget
    half = replace(settings, rel_tol=0.5 * settings.rel_tol, abs_tol=0.5 * settings.abs_tol)
    head = gauss_kronrod(g, _panels(0.0, cutoff, t, settings), half, raise_on_failure=False)

    def tail(u):
        one_minus = 1.0 - u
        w = cutoff + u / one_minus
        return g(w) / one_minus**2

    rest = gauss_kronrod(tail, [0.0, 1.0], half, raise_on_failure=False)
    value = head.value + rest.value
    error = head.error + rest.error
    res = QuadResult(value, error, head.n_intervals + rest.n_intervals)
    if error > max(settings.rel_tol * abs(value), settings.abs_tol):
        raise QuadratureError("semi-infinite integral did not converge", value, error)
    return res if full_output else res.value


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    *,
    points=(),
) -> complex:
    """Integral over [a, b]; infinite limits are mapped onto finite ranges."""
    if a == b:
        return 0.0
    if a > b:
        return -integrate(f, b, a, settings, points=points)
    inner = sorted(p for p in points if a < p < b)
    if np.isinf(a) and np.isinf(b):
        split = inner[0] if inner else 0.0
        return integrate(f, a, split, settings, points=inner) + integrate(
            f, split, b, settings, points=inner
        )
    if np.isinf(b):
        head_end = inner[-1] if inner else a
        head = integrate(f, a, head_end, settings, points=inner) if inner else 0.0

        def mapped(u):
            return f(head_end + u / (1.0 - u)) / (1.0 - u) ** 2

        return head + gauss_kronrod(mapped, [0.0, 1.0], settings).value
    if np.isinf(a):
        head_end = inner[0] if inner else b
        head = integrate(f, head_end, b, settings, points=inner) if inner else 0.0

        def mapped(u):
            return f(head_end - u / (1.0 - u)) / (1.0 - u) ** 2

        return head + gauss_kronrod(mapped, [0.0, 1.0], settings).value
    return gauss_kronrod(f, [a, *inner, b], settings).value


def principal_value(
    f: Callable[[np.ndarray], np.ndarray],
    pole: float,
    a: float = -np.inf,
    b: float = np.inf,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """Cauchy principal value of the integral of f(x) / (x - pole) over (a, b).

    Uses the symmetric combination (f(pole + u) - f(pole - u)) / u on the
    largest window around the pole that fits in (a, b); the remainder is a
    regular integral.
    """
    if not a < pole < b:
        raise ValueError(f"pole {pole} must lie strictly inside ({a}, {b})")
    r = min(pole - a, b - pole)

    def sym(u):
        return (f(pole + u) - f(pole - u)) / u

    value = integrate(sym, 0.0, r, settings)
    if pole + r < b:
        value += integrate(lambda x: f(x) / (x - pole), pole + r, b, settings)
    elif pole - r > a:
        value += integrate(lambda x: f(x) / (x - pole), a, pole - r, settings)
    return float(np.real(value))


def integrate_log_abs(
    f: Callable[[float], float],
    center: float,
    a: float,
    b: float,
    *,
    epsabs: float = 1e-13,
    epsrel: float = 1e-11,
) -> float:
    """Integral of f(x) * ln|x - center| over the finite interval [a, b].

    The logarithm is put in the quadrature weight (QUADPACK QAWS), so the
    singularity at ``center`` costs nothing.
    """
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("integrate_log_abs needs finite limits")
    total = 0.0
    opts = dict(epsabs=epsabs, epsrel=epsrel, limit=200)
    if a < center < b:
        total += _sp_integrate.quad(f, center, b, weight="alg-loga", wvar=(0, 0), **opts)[0]
        total += _sp_integrate.quad(f, a, center, weight="alg-logb", wvar=(0, 0), **opts)[0]
    elif center <= a:
        if center == a:
            total += _sp_integrate.quad(f, a, b, weight="alg-loga", wvar=(0, 0), **opts)[0]
        else:
            total += _sp_integrate.quad(lambda x: f(x) * np.log(x - center), a, b, **opts)[0]
    else:
        if center == b:
            total += _sp_integrate.quad(f, a, b, weight="alg-logb", wvar=(0, 0), **opts)[0]
        else:
            total += _sp_integrate.quad(lambda x: f(x) * np.log(center - x), a, b, **opts)[0]
    return total
