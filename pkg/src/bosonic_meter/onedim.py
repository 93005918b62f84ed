"""One-dimensional free-field apparatus with smeared coupling h.

Levels are 0-based: level 0 couples with +g, level 1 with -g, so every
kernel of level 1 is the negative of level 0. Probes are field operators
Pi_alpha = int h(x - x_alpha) Pi(x) dx labelled by name.

Conventions (T = 0 throughout):

* h_hat(q) = int h(x) cos(qx) dx, and the autocorrelation
  H(x) = int h(y) h(x - y) dy = (1/pi) int_0^inf h_hat(q)^2 cos(qx) dq.
* Only cosine-sector modes couple to the system, which fixes the continuum
  densities (q = w / c):
  G(w) = (g / 2pi) q h_hat^2 cos(q x_alpha),  J_01(w) = (2 g^2 / pi) q h_hat^2,
  M(w) = (1 / 2pi) q h_hat^2 cos(q (x_alpha - x_alpha')).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import integrate as _sp_integrate
from scipy import optimize, special

from .kernels import TimeKernels, thermal_correlation
from .model import ModelError, ProbeSet, SpectralData
from .oracle import DiscreteModel
from .quadrature import (
    DEFAULT_SETTINGS,
    QuadratureSettings,
    integrate,
    integrate_log_abs,
    integrate_semi_infinite,
    principal_value,
)

# beyond this many widths h is treated as zero
H_SUPPORT = 8.0


@dataclass(frozen=True)
class AutoCorr:
    """H(x) = int h(y) h(x - y) dy, with ``radius`` beyond which H is negligible."""

    H_func: Callable[[np.ndarray], np.ndarray]
    radius: float

    def __call__(self, x):
        return self.H_func(x)


def gaussian_autocorr(a: float) -> AutoCorr:
    pref = a * math.sqrt(math.pi / 2.0)
    return AutoCorr(lambda x: pref * np.exp(-np.asarray(x) ** 2 / (2.0 * a * a)), 12.0 * a)


def mixed_gaussian_autocorr(a: float, D: float) -> AutoCorr:
    """int exp(-y^2/a^2) exp(-(x - y)^2/D^2) dy."""
    s2 = a * a + D * D
    pref = math.sqrt(math.pi) * a * D / math.sqrt(s2)
    return AutoCorr(lambda x: pref * np.exp(-np.asarray(x) ** 2 / s2), 9.0 * math.sqrt(s2))


@dataclass(frozen=True)
class OneDimModel:
    """Coupling g (units sqrt(c)/a), width a, speed c, probes {label: x_alpha}.

    ``h`` defaults to exp(-x^2/a^2) with analytic transforms; any other even
    function is transformed numerically and must vanish beyond 8a. ``D`` is
    the width of the optional finite-range probe exp(-x^2/D^2).
    """

    g: float
    a: float = 1.0
    c: float = 1.0
    probes: Mapping[str, float] = field(default_factory=lambda: {"p0": 0.0})
    h: Callable[[np.ndarray], np.ndarray] | None = None
    D: float | None = None

    def __post_init__(self):
        if not (self.g > 0 and self.a > 0 and self.c > 0):
            raise ModelError("g, a, c must be positive")
        if self.D is not None and not self.D > 0:
            raise ModelError("D must be positive")
        object.__setattr__(self, "probes", {str(k): float(v) for k, v in self.probes.items()})
        if self.h is not None:
            x = np.linspace(0.0, H_SUPPORT * self.a, 257)
            if not np.allclose(self.h(x), self.h(-x), rtol=1e-12, atol=1e-15):
                raise ModelError("h must be even")
            tail = np.linspace(H_SUPPORT * self.a, 1.5 * H_SUPPORT * self.a, 65)
            if np.max(np.abs(self.h(tail))) >= 1e-12:
                raise ModelError(f"h must be below 1e-12 beyond {H_SUPPORT:g}a")

    @property
    def is_gaussian(self) -> bool:
        return self.h is None

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.probes)

    def position(self, label: str) -> float:
        try:
            return self.probes[label]
        except KeyError:
            raise ModelError(f"unknown probe {label!r}") from None

    def h_func(self, x):
        if self.h is None:
            return np.exp(-np.asarray(x, dtype=float) ** 2 / self.a**2)
        return self.h(np.asarray(x, dtype=float))

    def h_hat(self, q):
        """Cosine transform int h(x) cos(qx) dx."""
        q = np.asarray(q, dtype=float)
        if self.h is None:
            return math.sqrt(math.pi) * self.a * np.exp(-(q * self.a) ** 2 / 4.0)
        R = H_SUPPORT * self.a
        return np.vectorize(
            lambda k: 2.0 * _sp_integrate.quad(
                lambda x: float(self.h(np.array(x))), 0.0, R, weight="cos", wvar=k, limit=200
            )[0]
        )(q)

    @property
    def autocorr(self) -> AutoCorr:
        if self.h is None:
            return gaussian_autocorr(self.a)
        R = H_SUPPORT * self.a

        def H(x):
            def one(xv):
                lo, hi = max(-R, xv - R), min(R, xv + R)
                if lo >= hi:
                    return 0.0
                return _sp_integrate.quad(
                    lambda y: float(self.h(np.array(y)) * self.h(np.array(xv - y))),
                    lo, hi, limit=200, epsabs=1e-14,
                )[0]

            return np.vectorize(one)(np.asarray(x, dtype=float))

        return AutoCorr(H, 2.0 * R)

    @property
    def q_max(self) -> float:
        """Wavenumber beyond which h_hat^2 is negligible."""
        return (12.0 if self.h is None else 40.0) / self.a

    def Pi_squared(self) -> float:
        """<Pi_alpha^2> at T = 0 (same for every probe)."""
        if self.h is None:
            return self.c / 2.0
        val = integrate(
            lambda q: q * self.h_hat(q) ** 2, 0.0, self.q_max, DEFAULT_SETTINGS
        ).real
        return self.c * val / (2.0 * math.pi)


def _sign(level: int) -> float:
    if level not in (0, 1):
        raise ModelError(f"one-dimensional model has levels 0 and 1, got {level}")
    return 1.0 if level == 0 else -1.0


def closed_A(model: OneDimModel, x_alpha: float, t: float, level: int = 0) -> float:
    """(g/4) [H(x - ct) + H(x + ct) - 2 H(x)], negated for level 1."""
    H = model.autocorr
    ct = model.c * t
    val = 0.25 * model.g * (H(x_alpha - ct) + H(x_alpha + ct) - 2.0 * H(x_alpha))
    return _sign(level) * float(val)


def _pv_B(H: AutoCorr, g: float, x_alpha: float, tau: float, settings) -> float:
    """(g tau / 2pi) PV int H(x_alpha + x) / (tau^2 - x^2) dx by partial fractions."""
    if tau == 0:
        return 0.0
    lo, hi = -x_alpha - H.radius, -x_alpha + H.radius

    def f(x):
        return H(x_alpha + x)

    def pv(pole):
        if lo < pole < hi:
            return principal_value(f, pole, lo, hi, settings)
        return float(integrate(lambda x: f(x) / (x - pole), lo, hi, settings).real)

    # tau / (tau^2 - x^2) = (1/2) [1/(x + tau) - 1/(x - tau)]
    return g / (4.0 * math.pi) * (pv(-tau) - pv(tau))


def closed_B(
    model: OneDimModel,
    x_alpha: float,
    t: float,
    level: int = 0,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """g (ct / 2pi) PV int H(x_alpha + x) / ((ct)^2 - x^2) dx, negated for level 1."""
    return _sign(level) * _pv_B(model.autocorr, model.g, x_alpha, model.c * t, settings)


def closed_log_F12(model: OneDimModel, t: float) -> float:
    """-(2 g^2 / pi c) int ln|1 + ct/x| H(x) dx."""
    tau = model.c * t
    if tau == 0:
        return 0.0
    H = model.autocorr
    R = H.radius

    def f(x):
        return float(H(np.array(x)))

    # ln|1 + tau/x| = ln|x + tau| - ln|x|; both singularities go into QAWS weights
    val = integrate_log_abs(f, -tau, -R, R) - integrate_log_abs(f, 0.0, -R, R)
    return -2.0 * model.g**2 / (math.pi * model.c) * val


def closed_F12(model: OneDimModel, t: float) -> float:
    return math.exp(closed_log_F12(model, t))


def export_spectral(model: OneDimModel) -> SpectralData:
    """Continuum densities of the model, with zero phase moments."""
    g, c = model.g, model.c
    hh = model.h_hat

    def weight(w):
        q = np.asarray(w, dtype=float) / c
        return q * hh(q) ** 2

    def J(w):
        return 2.0 * g**2 / math.pi * weight(w)

    G = {}
    for label, x in model.probes.items():
        def G0(w, x=x):
            q = np.asarray(w, dtype=float) / c
            return g / (2.0 * math.pi) * weight(w) * np.cos(q * x)

        G[(label, 0)] = G0
        G[(label, 1)] = lambda w, G0=G0: -G0(w)
    M = {}
    for l1, x1 in model.probes.items():
        for l2, x2 in model.probes.items():
            M[(l1, l2)] = lambda w, d=x1 - x2: (
                weight(w) * np.cos(np.asarray(w, dtype=float) / c * d) / (2.0 * math.pi)
            )
    zero = {(0, 1): lambda w: np.zeros_like(np.asarray(w, dtype=float))}
    return SpectralData(
        n_levels=2,
        J={(0, 1): J},
        omega_cutoff=c * model.q_max,
        s_exponent={(0, 1): 1.0},
        G=G,
        M=M,
        D=zero,
        I=zero,
        trusted_G=True,
        name=f"onedim-gaussian(g={g:g}, a={model.a:g}, c={c:g})" if model.is_gaussian
        else "onedim-custom",
    )


def static_correlation(model: OneDimModel, x1: float, x2: float) -> float:
    """<Pi(x1) Pi(x2)> at T = 0 (not halved on the diagonal)."""
    if model.is_gaussian:
        y = abs(x1 - x2) / model.a
        r = math.sqrt(2.0)
        return 0.5 * model.c * (1.0 - r * y * float(special.dawsn(y / r)))
    pair = OneDimModel(model.g, model.a, model.c, {"u": x1, "v": x2}, model.h)
    labels = ("u", "v")
    val = thermal_correlation(export_spectral(pair), ProbeSet(labels), "u", "v")
    return 2.0 * val.real if x1 == x2 else val.real


def closed_kernels(
    model: OneDimModel, times, settings: QuadratureSettings = DEFAULT_SETTINGS
) -> TimeKernels:
    """TimeKernels from the closed forms, with zero phase."""
    times = np.asarray(sorted(float(t) for t in times))
    labels = model.labels
    xs = [model.probes[k] for k in labels]
    A = np.zeros((len(labels), 2, times.size))
    B = np.zeros_like(A)
    for ia, x in enumerate(xs):
        for it, t in enumerate(times):
            A[ia, 0, it] = closed_A(model, x, t)
            B[ia, 0, it] = closed_B(model, x, t, settings=settings)
    A[:, 1] = -A[:, 0]
    B[:, 1] = -B[:, 0]
    lnF = np.array([[closed_log_F12(model, t) for t in times]])
    C = np.array([[static_correlation(model, x1, x2) for x2 in xs] for x1 in xs], dtype=complex)
    C[np.diag_indices_from(C)] *= 0.5
    return TimeKernels(
        times=times, probes=labels, n_levels=2, A=A, B=B,
        F_abs=np.exp(lnF), phi=np.zeros_like(lnF), C=C, temperature=0.0,
    )


def discretize(model: OneDimModel, L: float, *, q_max: float | None = None) -> DiscreteModel:
    """Finite box of half-length L: modes q = n pi / 2L, couplings only on even n."""
    if not L > 0:
        raise ModelError("L must be positive")
    q_max = q_max or model.q_max
    n = np.arange(1, int(q_max * 2.0 * L / math.pi) + 1)
    q = n * math.pi / (2.0 * L)
    amp = np.sqrt(model.c * q / (2.0 * L)) * model.h_hat(q)
    even = n % 2 == 0
    lam1 = np.where(even, model.g * amp, 0.0)
    mus = []
    for x in model.probes.values():
        mus.append(np.where(even, amp * np.cos(q * x), -amp * np.sin(q * x)))
    return DiscreteModel(
        omegas=model.c * q,
        lambdas=np.vstack([lam1, -lam1]),
        mus=np.array(mus).reshape(len(model.probes), q.size),
        probes=model.labels,
        revival_time=L / model.c,
        L=L,
    )


@dataclass(frozen=True)
class XiData:
    """Gaussian data of the operator Xi(t0) with e^{i Xi} = e^{-i t0 H_0} e^{i t0 H_1}.

    ``variance`` uses the closed log F12 route and ``variance_direct`` the
    frequency integral of J; ``support_radius`` is c t0.
    """

    t0: float
    variance: float
    variance_direct: float
    support_radius: float
    cross_correlation: Callable[[float], complex]


def xi_gaussian_data(
    model: OneDimModel, t0: float, settings: QuadratureSettings = DEFAULT_SETTINGS
) -> XiData:
    if t0 < 0:
        raise ValueError("t0 must be >= 0")
    variance = -2.0 * closed_log_F12(model, t0)
    if t0 == 0:
        direct = 0.0
    else:
        J = export_spectral(model).J_fn(0, 1)
        direct = 4.0 * float(integrate_semi_infinite(
            lambda w: J(w) * np.sin(0.5 * w * t0) ** 2, "inv_omega_sq_coth", t0, settings,
            cutoff=model.c * model.q_max,
        ).real)

    def cross(x_alpha: float) -> complex:
        """<Xi(t0) Pi(x_alpha)> = 2i A(x_alpha, t0) - 2 B(x_alpha, t0)."""
        return complex(
            -2.0 * closed_B(model, x_alpha, t0, settings=settings),
            2.0 * closed_A(model, x_alpha, t0),
        )

    return XiData(t0, variance, direct, model.c * t0, cross)


@dataclass(frozen=True)
class FiniteRangeResult:
    """ln F~12 for the probe exp(-x^2/D^2) at x = 0.

    ``term1``, ``term2`` are the two asymptotic terms in units of
    gbar^2 = g^2 a^2 / c; ``exact`` is ln F12 + (2 B_D)^2 / Delta^2.
    """

    t: float
    D: float
    term1: float
    term2: float
    asymptotic: float
    exact: float
    notes: tuple[str, ...] = ()


def finite_range_term1(s: float) -> float:
    """-sqrt(2/pi) int ln|1 + s/x| exp(-x^2/2) dx."""
    if s == 0:
        return 0.0
    R = 40.0

    def f(x):
        return math.exp(-0.5 * x * x)

    val = integrate_log_abs(f, -s, -R, R) - integrate_log_abs(f, 0.0, -R, R)
    return -math.sqrt(2.0 / math.pi) * val


def finite_range_pv(s: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """PV int exp(-s^2 x^2) / (1 - x^2) dx; zero at s = 0."""
    if s == 0:
        return 0.0
    R = 12.0 / s + 2.0

    def f(x):
        return np.exp(-(s * np.asarray(x)) ** 2)

    # 1/(1 - x^2) = (1/2) [1/(x + 1) - 1/(x - 1)]
    return 0.5 * (
        principal_value(f, -1.0, -R, R, settings) - principal_value(f, 1.0, -R, R, settings)
    )


def finite_range_term2(s: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    return finite_range_pv(s, settings) ** 2 / math.pi


def finite_range_lnFtilde(
    model: OneDimModel,
    D: float | None,
    t: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> FiniteRangeResult:
    if not model.is_gaussian:
        raise ModelError("finite-range asymptotics need the Gaussian h")
    D = D if D is not None else model.D
    if D is None or not D > 0:
        raise ModelError("finite-range width D must be positive")
    notes = ()
    if D < 5.0 * model.a:
        notes = (f"D={D:g} < 5a: asymptotic form unreliable",)
        warnings.warn(notes[0], RuntimeWarning)
    a, c = model.a, model.c
    term1 = finite_range_term1(c * t / a)
    term2 = finite_range_term2(c * t / D, settings)
    gbar2 = model.g**2 * a**2 / c
    B_D = _pv_B(mixed_gaussian_autocorr(a, D), model.g, 0.0, c * t, settings)
    # <Pi_D^2> = (c / 2pi) int q pi D^2 exp(-q^2 D^2 / 2) dq = c / 2, so Delta^2 = c
    exact = closed_log_F12(model, t) + (2.0 * B_D) ** 2 / c
    return FiniteRangeResult(t, D, term1, term2, gbar2 * (term1 + term2), exact, notes)


def term2_peak_time(
    model: OneDimModel, D: float, settings: QuadratureSettings = DEFAULT_SETTINGS
) -> tuple[float, float]:
    """(t*, term2(t*)) maximising the second asymptotic term over t."""
    res = optimize.minimize_scalar(
        lambda t: -finite_range_term2(model.c * t / D, settings),
        bounds=(0.2 * D / model.c, 3.0 * D / model.c),
        method="bounded",
        options={"xatol": 1e-6 * D / model.c},
    )
    return float(res.x), float(-res.fun)


def dawson_B(model: OneDimModel, x_alpha: float, t: float) -> float:
    """Gaussian-h closed form of B through the Dawson function (level 0)."""
    if not model.is_gaussian:
        raise ModelError("dawson_B needs the Gaussian h")
    a, r2 = model.a, math.sqrt(2.0) * model.a
    ct = model.c * t
    return model.g * a / (2.0 * math.sqrt(2.0)) * float(
        special.dawsn((ct + x_alpha) / r2) + special.dawsn((ct - x_alpha) / r2)
    )
