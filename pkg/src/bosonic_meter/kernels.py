"""Time kernels A, B, |F|, the decoherence phase and static correlations C."""
from __future__ import annotations

import enum
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import ModelError, ProbeSet, SpectralData
from .quadrature import DEFAULT_SETTINGS, QuadratureSettings, integrate_semi_infinite


def _coth_half(w, temperature):
    if temperature == 0.0:
        return np.ones_like(w)
    return 1.0 / np.tanh(w / (2.0 * temperature))


def _half_sin_sq(w, t):
    return np.sin(0.5 * w * t) ** 2


def _omega_t_minus_sin(w, t):
    x = w * t
    small = np.abs(x) < 1e-3
    out = np.empty_like(x)
    xs = x[small]
    out[small] = xs**3 / 6.0 - xs**5 / 120.0
    out[~small] = x[~small] - np.sin(x[~small])
    return out


def kernel_A(
    spectral: SpectralData,
    alpha: str,
    level: int,
    t: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """Re of the integral of G(w) (e^{iwt} - 1) / w; temperature independent."""
    if t == 0:
        return 0.0
    G = spectral.G_fn(alpha, level)

    def f(w):
        g = np.asarray(G(w), dtype=complex)
        return g.real * (-2.0 * _half_sin_sq(w, t)) - g.imag * np.sin(w * t)

    return float(
        integrate_semi_infinite(f, "inv_omega", t, settings, cutoff=spectral.omega_cutoff).real
    )


def kernel_B(
    spectral: SpectralData,
    alpha: str,
    level: int,
    t: float,
    temperature: float = 0.0,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """Im of the integral of G(w) (e^{iwt} - 1) coth(w/2T) / w."""
    if t == 0:
        return 0.0
    G = spectral.G_fn(alpha, level)

    def f(w):
        g = np.asarray(G(w), dtype=complex)
        return g.real * np.sin(w * t) + g.imag * (-2.0 * _half_sin_sq(w, t))

    return float(
        integrate_semi_infinite(
            f, "inv_omega_coth", t, settings,
            temperature=temperature, cutoff=spectral.omega_cutoff,
        ).real
    )


def log_F_abs(
    spectral: SpectralData,
    l1: int,
    l2: int,
    t: float,
    temperature: float = 0.0,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    if t == 0 or l1 == l2:
        return 0.0
    J = spectral.J_fn(l1, l2)

    def f(w):
        return np.asarray(J(w), dtype=float) * _half_sin_sq(w, t)

    integral = integrate_semi_infinite(
        f, "inv_omega_sq_coth", t, settings,
        temperature=temperature, cutoff=spectral.omega_cutoff,
    ).real
    return -2.0 * float(integral)


def kernel_F_abs(
    spectral: SpectralData,
    l1: int,
    l2: int,
    t: float,
    temperature: float = 0.0,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """|F_{ll'}(t)| = exp(-2 * integral of J sin^2(wt/2) coth(w/2T) / w^2)."""
    return float(np.exp(log_F_abs(spectral, l1, l2, t, temperature, settings)))


def kernel_phase(
    spectral: SpectralData,
    l1: int,
    l2: int,
    t: float,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> float:
    """Phase of F_{ll'}(t) from the moments D and I of the couplings.

    phi = integral of [D(w) (wt - sin wt) + 4 I(w) sin^2(wt/2)] / w^2.
    """
    if not spectral.has_phase:
        raise ModelError("phase unavailable: spectral data carries no D/I moments")
    if t == 0 or l1 == l2:
        return 0.0
    sign = 1.0
    if l1 > l2:
        l1, l2, sign = l2, l1, -1.0
    D = spectral.D.get((l1, l2))
    I = spectral.I.get((l1, l2))
    if D is None or I is None:
        raise ModelError(f"phase unavailable for levels ({l1}, {l2})")

    def f(w):
        return (
            np.asarray(D(w), dtype=float) * _omega_t_minus_sin(w, t)
            + 4.0 * np.asarray(I(w), dtype=float) * _half_sin_sq(w, t)
        )

    val = integrate_semi_infinite(
        f, "inv_omega_sq_coth", t, settings, temperature=0.0, cutoff=spectral.omega_cutoff
    ).real
    return sign * float(val)


def thermal_correlation(
    spectral: SpectralData,
    probes: ProbeSet,
    a1: str,
    a2: str,
    temperature: float = 0.0,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> complex:
    """C_{a1 a2} = <Pi_a1 Pi_a2>, halved on the diagonal."""
    if probes.mu_overlap is not None:
        i, j = probes.index(a1), probes.index(a2)
        return complex(probes.mu_overlap[i, j])
    M = spectral.M_fn(a1, a2)

    def f(w):
        m = np.asarray(M(w), dtype=complex)
        return m.real * _coth_half(w, temperature) + 1j * m.imag

    val = complex(integrate_semi_infinite(f, "none", 0.0, settings, cutoff=spectral.omega_cutoff))
    if a1 == a2:
        val = 0.5 * val.real
    return complex(val)


def correlation_function(
    spectral: SpectralData,
    alpha: str,
    level: int,
    t: float,
    temperature: float = 0.0,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> complex:
    """<Pi_l Pi_alpha(t)>_M, the time derivative of B - iA."""
    G = spectral.G_fn(alpha, level)

    def f(w):
        z = np.asarray(G(w), dtype=complex) * np.exp(1j * w * t)
        return z.real * _coth_half(w, temperature) + 1j * z.imag

    return complex(integrate_semi_infinite(f, "none", t, settings, cutoff=spectral.omega_cutoff))


class Regime(str, enum.Enum):
    DIVERGING_LOG_F = "diverging_log_F"
    MARGINAL = "marginal"
    PLATEAU = "plateau"


@dataclass(frozen=True)
class Decoherence:
    regime: Regime
    growth_exponent: float | None = None


def classify_decoherence(s_exponent: float) -> Decoherence:
    """Long-time behaviour of ln|F| for J ~ w^s at small w."""
    if not s_exponent > 0:
        raise ModelError(f"spectral exponent must be > 0, got {s_exponent}")
    if s_exponent < 2:
        return Decoherence(Regime.DIVERGING_LOG_F, 2.0 - s_exponent)
    if s_exponent == 2:
        return Decoherence(Regime.MARGINAL)
    return Decoherence(Regime.PLATEAU)


@dataclass(frozen=True)
class TimeKernels:
    """Kernels sampled on a time grid.

    A, B have shape (n_probes, n_levels, n_times); F_abs and phi have shape
    (n_pairs, n_times) with pairs ordered as ``pairs`` (l < l').
    """

    times: np.ndarray
    probes: tuple[str, ...]
    n_levels: int
    A: np.ndarray
    B: np.ndarray
    F_abs: np.ndarray
    phi: np.ndarray
    C: np.ndarray
    temperature: float = 0.0
    phase_available: bool = True
    notes: tuple[str, ...] = ()
    pairs: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        n = self.n_levels
        object.__setattr__(
            self, "pairs", tuple((i, j) for i in range(n) for j in range(i + 1, n))
        )
        for name in ("times", "A", "B", "F_abs", "phi", "C"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def t_index(self, t: float) -> int:
        idx = np.flatnonzero(np.isclose(self.times, t, rtol=1e-12, atol=1e-14))
        if idx.size == 0:
            raise KeyError(f"time {t} not on the kernel grid")
        return int(idx[0])

    def probe_index(self, alpha: str) -> int:
        try:
            return self.probes.index(alpha)
        except ValueError:
            raise KeyError(f"no kernels for probe {alpha!r}") from None

    def a(self, alpha: str, level: int, t: float) -> float:
        return float(self.A[self.probe_index(alpha), level, self.t_index(t)])

    def b(self, alpha: str, level: int, t: float) -> float:
        return float(self.B[self.probe_index(alpha), level, self.t_index(t)])

    def F(self, l1: int, l2: int, t: float) -> complex:
        """Complex decoherence factor; F_{l'l} = conj(F_{ll'}), F_{ll} = 1."""
        if l1 == l2:
            return 1.0 + 0.0j
        k = self.pairs.index((min(l1, l2), max(l1, l2)))
        it = self.t_index(t)
        phase = self.phi[k, it] if l1 < l2 else -self.phi[k, it]
        return complex(self.F_abs[k, it] * np.exp(1j * phase))

    def C_sub(self, labels: Sequence[str]) -> np.ndarray:
        idx = [self.probe_index(a) for a in labels]
        return self.C[np.ix_(idx, idx)]

    def to_rows(self):
        """Header and rows for CSV export: t, A[a,l], B[a,l], F_abs[l,l'], phi[l,l']."""
        header = ["t"]
        for a in self.probes:
            header += [f"A[{a},{l}]" for l in range(self.n_levels)]
        for a in self.probes:
            header += [f"B[{a},{l}]" for l in range(self.n_levels)]
        header += [f"F_abs[{i},{j}]" for i, j in self.pairs]
        header += [f"phi[{i},{j}]" for i, j in self.pairs]
        rows = []
        for it, t in enumerate(self.times):
            row = [float(t)]
            row += [float(v) for v in self.A[:, :, it].ravel()]
            row += [float(v) for v in self.B[:, :, it].ravel()]
            row += [float(v) for v in self.F_abs[:, it]]
            row += [float(v) for v in self.phi[:, it]]
            rows.append(row)
        return header, rows


class KernelCache:
    """Memoises kernel evaluations keyed by (kind, indices, t)."""

    def __init__(
        self,
        spectral: SpectralData,
        temperature: float = 0.0,
        settings: QuadratureSettings = DEFAULT_SETTINGS,
    ):
        self.spectral = spectral
        self.temperature = temperature
        self.settings = settings
        self._values: dict[tuple, float] = {}
        self._lock = threading.Lock()

    def _get(self, key, compute):
        with self._lock:
            if key in self._values:
                return self._values[key]
        value = compute()
        with self._lock:
            self._values.setdefault(key, value)
        return value

    def A(self, alpha, level, t):
        return self._get(
            ("A", alpha, level, float(t)),
            lambda: kernel_A(self.spectral, alpha, level, t, self.settings),
        )

    def B(self, alpha, level, t):
        return self._get(
            ("B", alpha, level, float(t)),
            lambda: kernel_B(self.spectral, alpha, level, t, self.temperature, self.settings),
        )

    def log_F(self, l1, l2, t):
        return self._get(
            ("lnF", l1, l2, float(t)),
            lambda: log_F_abs(self.spectral, l1, l2, t, self.temperature, self.settings),
        )

    def phi(self, l1, l2, t):
        return self._get(
            ("phi", l1, l2, float(t)),
            lambda: kernel_phase(self.spectral, l1, l2, t, self.settings),
        )

    def __len__(self):
        return len(self._values)


def compute_kernels(
    spectral: SpectralData,
    probes: ProbeSet,
    times: Sequence[float],
    temperature: float = 0.0,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
    *,
    threads: int = 1,
    cache: KernelCache | None = None,
) -> TimeKernels:
    times = np.asarray(sorted(float(t) for t in times))
    if times.size and times[0] < 0:
        raise ValueError("times must be >= 0")
    cache = cache or KernelCache(spectral, temperature, settings)
    if cache.temperature != temperature:
        raise ValueError("cache temperature does not match")
    n = spectral.n_levels
    labels = probes.labels
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    with_phase = spectral.has_phase

    jobs = []
    for ia, a in enumerate(labels):
        for lvl in range(n):
            for it, t in enumerate(times):
                jobs.append(("A", ia, lvl, it, lambda a=a, lvl=lvl, t=t: cache.A(a, lvl, t)))
                jobs.append(("B", ia, lvl, it, lambda a=a, lvl=lvl, t=t: cache.B(a, lvl, t)))
    for k, (i, j) in enumerate(pairs):
        for it, t in enumerate(times):
            jobs.append(("F", k, 0, it, lambda i=i, j=j, t=t: cache.log_F(i, j, t)))
            if with_phase:
                jobs.append(("phi", k, 0, it, lambda i=i, j=j, t=t: cache.phi(i, j, t)))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(lambda job: job[-1](), jobs))
    else:
        values = [job[-1]() for job in jobs]

    A = np.zeros((len(labels), n, times.size))
    B = np.zeros_like(A)
    lnF = np.zeros((len(pairs), times.size))
    phi = np.zeros_like(lnF)
    for (kind, i0, i1, it, _), v in zip(jobs, values):
        if kind == "A":
            A[i0, i1, it] = v
        elif kind == "B":
            B[i0, i1, it] = v
        elif kind == "F":
            lnF[i0, it] = v
        else:
            phi[i0, it] = v

    C = np.zeros((len(labels), len(labels)), dtype=complex)
    for i, a1 in enumerate(labels):
        for j, a2 in enumerate(labels):
            if j < i:
                continue
            C[i, j] = thermal_correlation(spectral, probes, a1, a2, temperature, settings)
            C[j, i] = np.conj(C[i, j])
    notes = () if with_phase else ("phase assumed zero",)
    return TimeKernels(
        times=times, probes=tuple(labels), n_levels=n, A=A, B=B,
        F_abs=np.exp(lnF), phi=phi, C=C, temperature=temperature,
        phase_available=with_phase, notes=notes,
    )
