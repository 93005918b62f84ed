"""Physical specification of the measured system and its bosonic apparatus.

Units: hbar = k_B = 1. Levels are 0-based (level 0 is the one-based
``|1>``). Continuum spectral functions are plain callables of an array of
positive frequencies.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

SpectralFn = Callable[[np.ndarray], np.ndarray]

HERMITIAN_TOL = 1e-12


class ModelError(ValueError):
    """Raised when a model cannot be used for kernel evaluation."""


@dataclass(frozen=True)
class SystemSpec:
    energies: tuple[float, ...]
    rho0: np.ndarray
    temperature: float = 0.0

    def __post_init__(self):
        energies = tuple(float(e) for e in self.energies)
        rho = np.array(self.rho0, dtype=complex)
        rho.setflags(write=False)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "rho0", rho)
        if len(energies) < 2:
            raise ModelError("need at least two levels")
        if rho.shape != (len(energies), len(energies)):
            raise ModelError(
                f"rho0 has shape {rho.shape}, expected {(len(energies),) * 2}"
            )
        if not np.all(np.isfinite(rho)) or not np.all(np.isfinite(energies)):
            raise ModelError("non-finite entries in energies or rho0")
        if self.temperature < 0 or not np.isfinite(self.temperature):
            raise ModelError(f"temperature must be finite and >= 0, got {self.temperature}")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise ModelError("rho0 is not Hermitian")
        if abs(np.trace(rho) - 1.0) > HERMITIAN_TOL:
            raise ModelError(f"rho0 has trace {np.trace(rho).real:.15g}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -HERMITIAN_TOL:
            raise ModelError("rho0 is not positive semidefinite")

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    @classmethod
    def pure(cls, energies: Sequence[float], psi: Sequence[complex], temperature: float = 0.0):
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(tuple(energies), np.outer(psi, psi.conj()), temperature)


@dataclass(frozen=True)
class ProbeSet:
    """Labels of the smeared field operators Pi_alpha.

    ``mu_overlap`` optionally fixes the static correlations C directly, in the
    same storage convention as ``TimeKernels.C`` (diagonal = <Pi^2>/2).
    """

    labels: tuple[str, ...] = ()
    mu_overlap: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(set(self.labels)) != len(self.labels):
            raise ModelError("duplicate probe labels")
        if self.mu_overlap is not None:
            m = np.array(self.mu_overlap, dtype=complex)
            if m.shape != (len(self.labels),) * 2:
                raise ModelError("mu_overlap shape does not match labels")
            if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
                raise ModelError("mu_overlap is not Hermitian")
            m.setflags(write=False)
            object.__setattr__(self, "mu_overlap", m)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ModelError(f"unknown probe {label!r}") from None


def _pair(l1: int, l2: int) -> tuple[int, int]:
    return (l1, l2) if l1 <= l2 else (l2, l1)


@dataclass(frozen=True)
class SpectralData:
    """Coupling content of the apparatus after the continuum limit.

    J[(l, l')] with l < l' : sum_q |lambda_lq - lambda_l'q|^2 delta(w - w_q)
    G[(alpha, l)]           : sum_q mu_aq conj(lambda_lq) delta(w - w_q)
    M[(alpha, alpha')]      : sum_q mu_a'q conj(mu_aq) delta(w - w_q)
    D[(l, l')], I[(l, l')]  : phase moments (|lambda_l'|^2 - |lambda_l|^2) and
                              Im(lambda_l' conj(lambda_l)) densities
    """

    n_levels: int
    J: Mapping[tuple[int, int], SpectralFn]
    omega_cutoff: float
    s_exponent: Mapping[tuple[int, int], float] = field(default_factory=dict)
    G: Mapping[tuple[str, int], SpectralFn] = field(default_factory=dict)
    M: Mapping[tuple[str, str], SpectralFn] = field(default_factory=dict)
    D: Mapping[tuple[int, int], SpectralFn] | None = None
    I: Mapping[tuple[int, int], SpectralFn] | None = None
    trusted_G: bool = True
    name: str = "custom"

    def J_fn(self, l1: int, l2: int) -> SpectralFn:
        if l1 == l2:
            return _zero
        return self.J.get(_pair(l1, l2), _zero)

    def G_fn(self, alpha: str, level: int) -> SpectralFn:
        try:
            return self.G[(alpha, level)]
        except KeyError:
            raise ModelError(f"no G function for probe {alpha!r}, level {level}") from None

    def M_fn(self, a1: str, a2: str) -> SpectralFn:
        """Overlap density sum_q mu_{a2 q} conj(mu_{a1 q}) delta(w - w_q)."""
        if (a1, a2) in self.M:
            return self.M[(a1, a2)]
        if (a2, a1) in self.M:
            f = self.M[(a2, a1)]
            return lambda w: np.conj(f(w))
        raise ModelError(f"no overlap density for probes {a1!r}, {a2!r}")

    @property
    def has_phase(self) -> bool:
        return self.D is not None and self.I is not None

    @property
    def probe_labels(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for alpha, _ in self.G:
            seen.setdefault(alpha, None)
        return tuple(seen)


def _zero(w):
    return np.zeros_like(np.asarray(w, dtype=float))


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.violations)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str) -> None:
        self.violations.append(msg)


def _sample(fn: SpectralFn, w: np.ndarray, where: str) -> np.ndarray:
    vals = np.asarray(fn(w))
    if vals.shape != w.shape:
        vals = np.broadcast_to(vals, w.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        raise ModelError(f"{where}: non-finite value at omega={w[bad][0]:.6g}")
    return vals


def validate_model(
    spec: SystemSpec, spectral: SpectralData, probes: ProbeSet, *, n_samples: int = 256
) -> ValidationReport:
    """Check the finiteness conditions for the kernel integrals.

    J, Re G and omega * Im G must vanish as omega -> 0. The check compares the
    value at ``1e-6 * cutoff`` against the largest sampled magnitude.
    """
    report = ValidationReport()
    if spectral.n_levels != spec.n_levels:
        report.add(
            f"spectral data has {spectral.n_levels} levels, system has {spec.n_levels}"
        )
    wc = spectral.omega_cutoff
    w = np.geomspace(1e-8 * wc, wc, n_samples)
    w_small = w[w <= 1e-6 * wc][-1]
    rng = np.random.default_rng(0)
    w_rand = rng.uniform(1e-6 * wc, wc, 64)

    def vanishes(vals: np.ndarray) -> bool:
        scale = np.max(np.abs(vals))
        if scale == 0.0:
            return True
        return abs(vals[w == w_small][0]) <= 1e-3 * scale

    for (l1, l2), fn in spectral.J.items():
        where = f"J[{l1},{l2}]"
        if l1 == l2:
            vals = _sample(fn, w, where)
            if np.max(np.abs(vals)) > 0:
                report.add(f"{where}: diagonal spectral density must vanish")
            continue
        vals = _sample(fn, w, where)
        if np.iscomplexobj(vals) and np.any(vals.imag != 0):
            report.add(f"{where}: spectral density must be real")
        neg = vals.real < 0
        if neg.any():
            report.add(f"{where}: negative value at omega={w[neg][0]:.6g}")
        if not vanishes(vals):
            report.add(
                f"{where}: J does not vanish at omega->0 (omega={w_small:.3g}, "
                f"value={abs(vals[w == w_small][0]):.3g})"
            )
        swapped = spectral.J_fn(l2, l1)
        if not np.allclose(_sample(swapped, w_rand, where), _sample(fn, w_rand, where)):
            report.add(f"{where}: J is not symmetric in its level indices")

    labels = set(probes.labels)
    for (alpha, level), fn in spectral.G.items():
        where = f"G[{alpha},{level}]"
        if alpha not in labels:
            report.add(f"{where}: probe {alpha!r} missing from ProbeSet")
        if not 0 <= level < spec.n_levels:
            report.add(f"{where}: level index out of range")
        vals = _sample(fn, w, where).astype(complex)
        if not vanishes(vals.real):
            report.add(f"{where}: Re G does not vanish at omega->0")
        if not vanishes(w * vals.imag):
            report.add(f"{where}: omega * Im G does not vanish at omega->0")
    return report


def power_law(
    coupling: float, s: float, omega_c: float = 1.0, *, n_levels: int = 2
) -> SpectralData:
    """J = coupling * w^s exp(-w/omega_c) between levels 0 and 1."""
    if coupling < 0 or s <= 0 or omega_c <= 0:
        raise ModelError("power-law family needs coupling >= 0, s > 0, omega_c > 0")
    # omega_c**(1-s) keeps coupling dimensionless-ish: J has units of frequency
    scale = coupling * omega_c ** (1.0 - s)

    def J(w):
        w = np.asarray(w, dtype=float)
        return scale * w**s * np.exp(-w / omega_c)

    return SpectralData(
        n_levels=n_levels,
        J={(0, 1): J},
        omega_cutoff=(40.0 + 2.0 * s) * omega_c,
        s_exponent={(0, 1): float(s)},
        name=f"power-law(s={s:g})",
    )


def ohmic(coupling: float, omega_c: float = 1.0, *, n_levels: int = 2) -> SpectralData:
    """J = coupling * w exp(-w/omega_c)."""
    data = power_law(coupling, 1.0, omega_c, n_levels=n_levels)
    return SpectralData(**{**data.__dict__, "name": "ohmic"})
