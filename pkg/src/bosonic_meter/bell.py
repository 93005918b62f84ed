"""CHSH combination for a two-level system read out by the 1D apparatus.

A_{1,2} = alpha sigma_z +- beta sigma_x, B_1 = sin(gamma Pi_0) with Pi_0 the
probe at x = 0, and B_2 = cos(Xi(t0) + theta/2) where
e^{i Xi(t0)} = e^{-i t0 H_0} e^{i t0 H_1}. Then

    f(t) = 4 beta Re(rho_10 e^{it(E_0 - E_1)} <e^{itH_0} B_2 e^{-itH_1}>)
           + 2 alpha [rho_00 <B_1>_0 - rho_11 <B_1>_1].

The B_2 term is a product of propagators e^{-isH_l}. Every such
propagator is a free evolution times a displacement, so words in them are
evaluated exactly per mode and summed with the density |lambda_0|^2 = J/4.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .expectation import Char, ObservableSpec, effective_expectation
from .kernels import _omega_t_minus_sin
from .model import ModelError, SystemSpec
from .onedim import OneDimModel, closed_A, closed_kernels, closed_log_F12, export_spectral
from .quadrature import DEFAULT_SETTINGS, QuadratureSettings, integrate_semi_infinite

PROBE = "Pi0"


@dataclass(frozen=True)
class BellConfig:
    t0: float
    theta: float
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if abs(self.alpha**2 + self.beta**2 - 1.0) > 1e-12:
            raise ValueError("alpha^2 + beta^2 must equal 1")
        if self.t0 < 0:
            raise ValueError("t0 must be >= 0")


def _require_two_levels(spec: SystemSpec):
    if spec.n_levels != 2:
        raise ModelError("the CHSH construction needs a two-level system")


def _propagator(level_sign: float, s: float, w: np.ndarray):
    """e^{-is H_l} per unit coupling: (s, xi, phi) with lambda = level_sign."""
    osc = (-2.0 * np.sin(0.5 * w * s) ** 2 + 1j * np.sin(w * s)) / w
    xi = -level_sign * osc
    phi = _omega_t_minus_sin(w, s) / w**2
    return s, xi, phi


def _inverse(elem, w):
    s, xi, phi = elem
    return -s, -xi * np.exp(-1j * w * s), -phi


def _compose(e1, e2, w):
    s1, x1, p1 = e1
    s2, x2, p2 = e2
    shifted = x1 * np.exp(1j * w * s2)
    return s1 + s2, shifted + x2, p1 + p2 + np.imag(shifted * np.conj(x2))


def word_log_expectation(word: Sequence[tuple[int, float, bool]], w: np.ndarray) -> np.ndarray:
    """Per-mode log <word> at T = 0, per unit |lambda_0|^2.

    ``word`` lists (level, s, adjoint) factors of e^{-is H_level}, left to
    right; the total free-evolution time must vanish.
    """
    w = np.asarray(w, dtype=float)
    acc = (0.0, np.zeros_like(w, dtype=complex), np.zeros_like(w))
    for level, s, adjoint in word:
        elem = _propagator(1.0 if level == 0 else -1.0, s, w)
        if adjoint:
            elem = _inverse(elem, w)
        acc = _compose(acc, elem, w)
    if abs(acc[0]) > 1e-12:
        raise ValueError("word does not close: net free evolution is nonzero")
    return 1j * acc[2] - 0.5 * np.abs(acc[1]) ** 2


def word_expectation(
    model: OneDimModel,
    word: Sequence[tuple[int, float, bool]],
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> complex:
    J = export_spectral(model).J_fn(0, 1)
    t_scale = max((abs(s) for _, s, _ in word), default=0.0)

    def f(w):
        return 0.25 * J(w) * word_log_expectation(word, w)

    log_val = integrate_semi_infinite(f, "none", t_scale, settings, cutoff=model.c * model.q_max)
    return complex(np.exp(log_val))


def b2_matrix_element(
    model: OneDimModel, t0: float, theta: float, t: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> complex:
    """<e^{itH_0} cos(Xi(t0) + theta/2) e^{-itH_1}>."""
    V = lambda lvl, s: (lvl, s, False)  # noqa: E731
    Vd = lambda lvl, s: (lvl, s, True)  # noqa: E731
    plus = word_expectation(model, [Vd(0, t), V(0, t0), Vd(1, t0), V(1, t)], settings)
    minus = word_expectation(model, [Vd(0, t), V(1, t0), Vd(0, t0), V(1, t)], settings)
    return 0.5 * np.exp(0.5j * theta) * plus + 0.5 * np.exp(-0.5j * theta) * minus


def b1_expectation(model: OneDimModel, gamma: float, t: float, level: int) -> float:
    """<e^{itH_l} sin(gamma Pi_0) e^{-itH_l}> = e^{-gamma^2 <Pi_0^2>/2} sin(2 gamma A_0^{(l)})."""
    return math.exp(-0.5 * gamma**2 * model.Pi_squared()) * math.sin(
        2.0 * gamma * closed_A(model, 0.0, t, level)
    )


def bell_f(
    model: OneDimModel, spec: SystemSpec, config: BellConfig, t: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    _require_two_levels(spec)
    rho, E = spec.rho0, spec.energies
    b1 = rho[0, 0].real * b1_expectation(model, config.gamma, t, 0) - rho[1, 1].real * (
        b1_expectation(model, config.gamma, t, 1)
    )
    inter = 0.0
    if abs(rho[1, 0]) > 0 and config.beta != 0:
        m = b2_matrix_element(model, config.t0, config.theta, t, settings)
        inter = (rho[1, 0] * np.exp(1j * t * (E[0] - E[1])) * m).real
    return float(4.0 * config.beta * inter + 2.0 * config.alpha * b1)


def bell_f_t0(model: OneDimModel, spec: SystemSpec, config: BellConfig) -> float:
    """f(t0) in closed form.

    2 beta |rho_01| (cos psi + F^4 cos(psi - theta)) + 2 alpha <B_1>, where psi
    is the phase of rho_10 e^{i t0 (E_0 - E_1)} e^{i theta/2}; psi = 0 at
    ``optimal_theta``, giving 2 beta |rho_01| (1 + F^4 cos theta).
    """
    _require_two_levels(spec)
    F4 = math.exp(4.0 * closed_log_F12(model, config.t0))
    b1 = b1_expectation(model, config.gamma, config.t0, 0)
    E = spec.energies
    psi = config.theta / 2.0 - float(np.angle(spec.rho0[0, 1])) + config.t0 * (E[0] - E[1])
    coherence = math.cos(psi) + F4 * math.cos(psi - config.theta)
    return 2.0 * config.beta * abs(spec.rho0[0, 1]) * coherence + 2.0 * config.alpha * b1


def optimal_theta(spec: SystemSpec, t0: float) -> float:
    """theta making rho_10 e^{i t0 (E_0 - E_1)} e^{i theta/2} real and positive."""
    E = spec.energies
    return 2.0 * (float(np.angle(spec.rho0[0, 1])) - t0 * (E[0] - E[1]))


def optimal_z(model: OneDimModel, spec: SystemSpec, t0: float) -> tuple[complex, float, float]:
    """(z, gamma, theta) with gamma = pi / (4 A_0(t0))."""
    _require_two_levels(spec)
    A0 = closed_A(model, 0.0, t0, 0)
    if A0 == 0.0:
        raise ModelError("gamma undefined: A_0(t0) = 0")
    gamma = math.pi / (4.0 * A0)
    theta = optimal_theta(spec, t0)
    F4 = math.exp(4.0 * closed_log_F12(model, t0))
    re = math.exp(-0.5 * gamma**2 * model.Pi_squared()) * math.sin(2.0 * gamma * A0)
    im = abs(spec.rho0[0, 1]) * (1.0 + F4 * math.cos(theta))
    return complex(re, im), gamma, theta


def optimal_config(model: OneDimModel, spec: SystemSpec, t0: float) -> BellConfig:
    """alpha + i beta = z / |z|, which gives f(t0) = 2|z|."""
    z, gamma, theta = optimal_z(model, spec, t0)
    unit = z / abs(z)
    return BellConfig(t0=t0, theta=theta, alpha=unit.real, beta=unit.imag, gamma=gamma)


def f_effective(model: OneDimModel, spec: SystemSpec, config: BellConfig, t: float) -> float:
    """The same combination in the separable mixture: only sigma_z (x) B_1 survives."""
    _require_two_levels(spec)
    probe_model = replace(model, probes={PROBE: 0.0})
    kernels = closed_kernels(probe_model, [t])
    g = config.gamma
    # 2 alpha sin(gamma Pi_0) = (alpha / i) (e^{i gamma Pi_0} - e^{-i gamma Pi_0})
    sin_block = [Char({PROBE: g}, -1j * config.alpha), Char({PROBE: -g}, 1j * config.alpha)]
    neg_block = [Char({PROBE: g}, 1j * config.alpha), Char({PROBE: -g}, -1j * config.alpha)]
    obs = ObservableSpec({(0, 0): sin_block, (1, 1): neg_block})
    return float(effective_expectation(spec, kernels, obs, t).real)


@dataclass(frozen=True)
class ScanRow:
    g: float
    t0: float
    gamma: float
    alpha: float
    beta: float
    two_abs_z: float
    violated: bool

    HEADER = ("g", "t0", "gamma", "alpha", "beta", "two_abs_z", "violated")

    def as_tuple(self):
        return (self.g, self.t0, self.gamma, self.alpha, self.beta, self.two_abs_z,
                int(self.violated))


def violation_scan(
    model: OneDimModel,
    spec: SystemSpec,
    t0_grid: Sequence[float],
    g_grid: Sequence[float],
    *,
    threads: int = 1,
) -> list[ScanRow]:
    if not len(t0_grid) or not len(g_grid):
        raise ValueError("scan grids must be nonempty")

    def row(args):
        g, t0 = args
        m = replace(model, g=float(g))
        z, gamma, theta = optimal_z(m, spec, float(t0))
        unit = z / abs(z)
        two = 2.0 * abs(z)
        return ScanRow(float(g), float(t0), gamma, unit.real, unit.imag, two, two > 2.0)

    cases = [(g, t0) for g in g_grid for t0 in t0_grid]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(row, cases))
    return [row(c) for c in cases]
