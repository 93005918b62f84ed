"""Expectation values of block observables O = sum |l><l'| (x) O_{ll'}.

A block is a term or a list of terms summed together: ``Scalar`` (a
number times the identity on the apparatus), ``Moment`` (coeff times an
ordered product of probe powers), ``Char`` (coeff times ordered
exponentials exp(i X_a Pi_a)) or ``Delta`` (delta(Pi_a - p)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid

from .generating import gaussian_data, generating, moment
from .kernels import TimeKernels
from .model import SystemSpec

IMAG_TOL = 1e-10


@dataclass(frozen=True)
class Scalar:
    value: complex = 1.0

    key = ("scalar",)

    @property
    def weight(self):
        return self.value

    def adjoint(self):
        return Scalar(np.conj(self.value))

    def evaluate(self, kernels, l1, l2, t):
        return complex(self.value) * kernels.F(l1, l2, t)


@dataclass(frozen=True)
class Moment:
    powers: Mapping[str, int]
    coeff: complex = 1.0

    @property
    def key(self):
        return ("moment", tuple(sorted((k, n) for k, n in self.powers.items() if n)))

    @property
    def weight(self):
        return self.coeff

    def adjoint(self):
        # reversing the product is immaterial only for commuting probes
        return Moment(dict(self.powers), np.conj(self.coeff))

    def evaluate(self, kernels, l1, l2, t):
        return complex(self.coeff) * moment(kernels, l1, l2, t, self.powers)


@dataclass(frozen=True)
class Char:
    X: Mapping[str, float]
    coeff: complex = 1.0

    @property
    def key(self):
        return ("char", tuple(sorted((k, float(x)) for k, x in self.X.items() if x)))

    @property
    def weight(self):
        return self.coeff

    def adjoint(self):
        return Char({k: -v for k, v in self.X.items()}, np.conj(self.coeff))

    def evaluate(self, kernels, l1, l2, t):
        return complex(self.coeff) * generating(kernels, l1, l2, t, self.X)


@dataclass(frozen=True)
class Delta:
    probe: str
    p: float
    coeff: complex = 1.0

    @property
    def key(self):
        return ("delta", self.probe, float(self.p))

    @property
    def weight(self):
        return self.coeff

    def adjoint(self):
        return Delta(self.probe, self.p, np.conj(self.coeff))

    def evaluate(self, kernels, l1, l2, t):
        return complex(self.coeff) * delta_block(kernels, l1, l2, t, self.probe, self.p)[0]


Term = Union[Scalar, Moment, Char, Delta]


def _terms(block) -> tuple:
    if isinstance(block, (Scalar, Moment, Char, Delta)):
        return (block,)
    if isinstance(block, (int, float, complex, np.number)):
        return (Scalar(block),)
    return tuple(b for item in block for b in _terms(item))


def _canonical(terms) -> dict:
    """Sum of weights per distinct operator."""
    out: dict = {}
    for term in terms:
        out[term.key] = out.get(term.key, 0.0) + complex(term.weight)
    return out


def _same_terms(a: tuple, b: tuple) -> bool:
    ca, cb = _canonical(a), _canonical(b)
    keys = set(ca) | set(cb)
    return all(
        abs(ca.get(k, 0.0) - cb.get(k, 0.0)) <= 1e-12 * max(1.0, abs(ca.get(k, 0.0)))
        for k in keys
    )


@dataclass(frozen=True)
class ObservableSpec:
    """Blocks keyed by (l, l'); missing blocks are zero.

    With ``hermitian`` set the blocks must satisfy O_{l'l} = O_{ll'}^dagger.
    """

    blocks: Mapping[tuple[int, int], object]
    hermitian: bool = True
    _resolved: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = {tuple(k): _terms(v) for k, v in self.blocks.items()}
        object.__setattr__(self, "_resolved", terms)
        if self.hermitian:
            for (l1, l2), ts in terms.items():
                adj = tuple(t.adjoint() for t in terms.get((l2, l1), ()))
                if not _same_terms(ts, adj):
                    raise ValueError(f"block ({l2},{l1}) is not the adjoint of block ({l1},{l2})")

    def items(self):
        return self._resolved.items()

    @property
    def is_diagonal(self) -> bool:
        return all(l1 == l2 for l1, l2 in self._resolved)

    @classmethod
    def projector(cls, u: Sequence[complex]) -> "ObservableSpec":
        """|u><u| (x) identity."""
        u = np.asarray(u, dtype=complex)
        n = u.size
        return cls({(i, j): Scalar(u[i] * np.conj(u[j])) for i in range(n) for j in range(n)})


def delta_block(kernels: TimeKernels, l1: int, l2: int, t: float, probe: str, p) -> np.ndarray:
    """<e^{itH_l1} delta(Pi_probe - p) e^{-itH_l2}> on an array of p."""
    ia = kernels.probe_index(probe)
    pref, b, M = gaussian_data(kernels, l1, l2, t)
    m = M[ia, ia].real
    if not m > 0:
        raise ValueError(f"probe {probe!r} has zero thermal width")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    # (1/2pi) int dx e^{-ipx} exp(b x - m x^2 / 2)
    return pref * np.exp((b[ia] - 1j * p) ** 2 / (2.0 * m)) / math.sqrt(2.0 * math.pi * m)


def _block_value(kernels, l1, l2, t, terms) -> complex:
    return sum((term.evaluate(kernels, l1, l2, t) for term in terms), 0.0 + 0.0j)


def _check_levels(spec: SystemSpec, kernels: TimeKernels):
    if spec.n_levels != kernels.n_levels:
        raise ValueError(
            f"system has {spec.n_levels} levels, kernels have {kernels.n_levels}"
        )


def _parts(spec, kernels, obs, t):
    _check_levels(spec, kernels)
    rho, E = spec.rho0, spec.energies
    diag = 0.0 + 0.0j
    inter = 0.0 + 0.0j
    for (l1, l2), terms in obs.items():
        val = rho[l2, l1] * _block_value(kernels, l1, l2, t, terms)
        if l1 == l2:
            diag += val
        else:
            inter += val * np.exp(1j * t * (E[l1] - E[l2]))
    return diag, inter


def _checked(obs, value: complex) -> complex:
    if obs.hermitian and abs(value.imag) > IMAG_TOL * max(1.0, abs(value)):
        raise ArithmeticError(
            f"hermitian observable has imaginary expectation {value.imag:.3e}"
        )
    return value


def expectation_value(spec: SystemSpec, kernels: TimeKernels, obs: ObservableSpec, t: float):
    """sum_{l,l'} rho_{l'l} e^{it(E_l - E_l')} <e^{itH_l} O_{ll'} e^{-itH_l'}>."""
    diag, inter = _parts(spec, kernels, obs, t)
    return _checked(obs, diag + inter)


def effective_expectation(spec: SystemSpec, kernels: TimeKernels, obs: ObservableSpec, t: float):
    """Prediction of the separable mixture: the diagonal blocks only."""
    diag, _ = _parts(spec, kernels, obs, t)
    return _checked(obs, diag)


def quantum_residual(spec: SystemSpec, kernels: TimeKernels, obs: ObservableSpec, t: float):
    if obs.is_diagonal:
        return 0.0 + 0.0j
    _, inter = _parts(spec, kernels, obs, t)
    return _checked(obs, inter)


@dataclass(frozen=True)
class ProbabilityResult:
    """Joint density of |u><u| and Pi_probe = p.

    ``norm_check`` is the grid integral of ``total``; ``population`` is
    <|u><u|>(t), which it should reproduce.
    """

    t: float
    p_grid: np.ndarray
    total: np.ndarray
    separable: np.ndarray
    interference: np.ndarray
    norm_check: float
    population: float

    @property
    def norm_error(self) -> float:
        return abs(self.norm_check - self.population)

    def rows(self):
        return zip(self.p_grid, self.total, self.separable, self.interference)


def default_p_grid(
    kernels: TimeKernels, probe: str, t: float, n: int = 1025, half_width: float = 7.0
) -> np.ndarray:
    """Uniform grid covering every Gaussian branch by ``half_width`` in p / Delta."""
    ia = kernels.probe_index(probe)
    delta = math.sqrt(4.0 * kernels.C[ia, ia].real)
    A = kernels.A[ia, :, kernels.t_index(t)]
    centres = [(A[i] + A[j]) for i in range(A.size) for j in range(i, A.size)]
    lo = min(centres) - half_width * delta
    hi = max(centres) + half_width * delta
    return np.linspace(lo, hi, n)


def joint_probability(
    spec: SystemSpec,
    kernels: TimeKernels,
    u: Sequence[complex],
    probe: str,
    p_grid: np.ndarray | None = None,
    t: float = 0.0,
) -> ProbabilityResult:
    _check_levels(spec, kernels)
    u = np.asarray(u, dtype=complex)
    if u.size != spec.n_levels:
        raise ValueError("u must have one entry per level")
    if p_grid is None:
        p_grid = default_p_grid(kernels, probe, t)
    p_grid = np.asarray(p_grid, dtype=float)
    rho, E = spec.rho0, spec.energies
    n = spec.n_levels
    separable = np.zeros(p_grid.size)
    interference = np.zeros(p_grid.size)
    for l1 in range(n):
        w = rho[l1, l1] * abs(u[l1]) ** 2
        separable += (w * delta_block(kernels, l1, l1, t, probe, p_grid)).real
        for l2 in range(l1 + 1, n):
            c = u[l1] * np.conj(u[l2]) * rho[l2, l1] * np.exp(1j * t * (E[l1] - E[l2]))
            interference += 2.0 * (c * delta_block(kernels, l1, l2, t, probe, p_grid)).real
    total = separable + interference
    population = expectation_value(spec, kernels, ObservableSpec.projector(u), t).real
    return ProbabilityResult(
        t=t,
        p_grid=p_grid,
        total=total,
        separable=separable,
        interference=interference,
        norm_check=float(trapezoid(total, p_grid)),
        population=float(population),
    )


def conditional_probability(
    spec: SystemSpec,
    kernels: TimeKernels,
    u: Sequence[complex],
    probe: str,
    p_grid: np.ndarray | None = None,
    t: float = 0.0,
) -> np.ndarray:
    res = joint_probability(spec, kernels, u, probe, p_grid, t)
    if res.population < 1e-12:
        raise ZeroDivisionError(
            f"conditioning on null event: <|u><u|>({t:g}) = {res.population:.3e}"
        )
    return res.total / res.population


def explicit_form_probability(
    spec: SystemSpec, kernels: TimeKernels, u: Sequence[complex], probe: str, p, t: float
) -> np.ndarray:
    """The same density written with Delta, Q_{ll'} and F~_{ll'} explicitly."""
    ia = kernels.probe_index(probe)
    it = kernels.t_index(t)
    delta = math.sqrt(4.0 * kernels.C[ia, ia].real)
    pbar = np.asarray(p, dtype=float) / delta
    A, B = kernels.A[ia, :, it], kernels.B[ia, :, it]
    rho, E = spec.rho0, spec.energies
    u = np.asarray(u, dtype=complex)
    out = np.zeros_like(pbar)
    norm = 1.0 / (math.sqrt(math.pi) * delta)
    for l1 in range(spec.n_levels):
        Q = 2.0 * A[l1] / delta
        out += (rho[l1, l1] * abs(u[l1]) ** 2).real * norm * np.exp(-((pbar - Q) ** 2))
        for l2 in range(l1 + 1, spec.n_levels):
            Q = (A[l1] + A[l2]) / delta
            dB = B[l1] - B[l2]
            Ft = kernels.F(l1, l2, t) * np.exp(dB**2 / delta**2)
            phase = np.exp(2j * dB * (pbar - Q) / delta)
            c = u[l1] * np.conj(u[l2]) * rho[l2, l1] * np.exp(1j * t * (E[l1] - E[l2]))
            out += 2.0 * norm * np.exp(-((pbar - Q) ** 2)) * (Ft * c * phase).real
    return out
