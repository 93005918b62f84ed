"""Brute-force references: finite mode sums and truncated-Fock propagation.

Nothing here uses the continuum quadrature; the mode sums evaluate the
kernel definitions directly and ``fock_generating`` builds the Hamiltonians
as dense matrices in a truncated number basis.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .kernels import TimeKernels


@dataclass(frozen=True)
class DiscreteModel:
    """Finitely many modes with frequencies ``omegas``.

    ``lambdas`` has shape (n_levels, n_modes), ``mus`` (n_probes, n_modes).
    ``revival_time`` is the time after which finite-size echoes appear (L/c
    for the one-dimensional apparatus), if known.
    """

    omegas: np.ndarray
    lambdas: np.ndarray
    mus: np.ndarray
    probes: tuple[str, ...] = ()
    revival_time: float | None = None
    L: float | None = None

    def __post_init__(self):
        w = np.asarray(self.omegas, dtype=float)
        lam = np.atleast_2d(np.asarray(self.lambdas, dtype=complex))
        mu = np.asarray(self.mus, dtype=complex)
        mu = mu.reshape(-1, w.size) if mu.size else np.zeros((0, w.size), complex)
        if np.any(w <= 0) or np.any(np.diff(w) <= 0):
            raise ValueError("mode frequencies must be positive and strictly increasing")
        if lam.shape[1] != w.size:
            raise ValueError("lambdas must have shape (n_levels, n_modes)")
        probes = tuple(self.probes) or tuple(f"p{i}" for i in range(mu.shape[0]))
        if len(probes) != mu.shape[0]:
            raise ValueError("one probe label per row of mus")
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "mus", mu)
        object.__setattr__(self, "probes", probes)

    @property
    def n_modes(self) -> int:
        return self.omegas.size

    @property
    def n_levels(self) -> int:
        return self.lambdas.shape[0]

    def restrict(self, modes: Sequence[int]) -> "DiscreteModel":
        modes = list(modes)
        return DiscreteModel(
            self.omegas[modes], self.lambdas[:, modes], self.mus[:, modes],
            self.probes, self.revival_time, self.L,
        )


def _coth_half(w, temperature):
    if temperature == 0.0:
        return np.ones_like(w)
    return 1.0 / np.tanh(w / (2.0 * temperature))


def discrete_phase(dm: DiscreteModel, l1: int, l2: int, t: np.ndarray) -> np.ndarray:
    w = dm.omegas[:, None]
    t = np.atleast_1d(np.asarray(t, dtype=float))[None, :]
    lam1 = dm.lambdas[l1][:, None]
    lam2 = dm.lambdas[l2][:, None]
    d = np.abs(lam2) ** 2 - np.abs(lam1) ** 2
    im = np.imag(lam2 * np.conj(lam1))
    terms = d * (w * t - np.sin(w * t)) / w**2 + 4.0 * im * np.sin(0.5 * w * t) ** 2 / w**2
    return terms.sum(axis=0)


def discrete_kernels(
    dm: DiscreteModel, times: Sequence[float], temperature: float = 0.0
) -> TimeKernels:
    """All kernels as direct finite sums over the modes of ``dm``."""
    times = np.asarray(sorted(float(t) for t in times))
    if dm.revival_time is not None and times.size and times[-1] >= dm.revival_time:
        warnings.warn(
            f"revival regime: t={times[-1]:g} >= {dm.revival_time:g}", RuntimeWarning
        )
    w = dm.omegas[:, None]
    t = times[None, :]
    coth = _coth_half(dm.omegas, temperature)[:, None]
    # e^{iwt} - 1 without cancellation at small w t
    osc = -2.0 * np.sin(0.5 * w * t) ** 2 + 1j * np.sin(w * t)

    n_lv = dm.n_levels
    n_pr = len(dm.probes)
    A = np.zeros((n_pr, n_lv, times.size))
    B = np.zeros_like(A)
    for ia in range(n_pr):
        for lvl in range(n_lv):
            z = (dm.mus[ia] * np.conj(dm.lambdas[lvl]))[:, None] * osc / w
            A[ia, lvl] = z.real.sum(axis=0)
            B[ia, lvl] = (z * coth).imag.sum(axis=0)
    pairs = [(i, j) for i in range(n_lv) for j in range(i + 1, n_lv)]
    lnF = np.zeros((len(pairs), times.size))
    phi = np.zeros_like(lnF)
    for k, (i, j) in enumerate(pairs):
        dl = np.abs(dm.lambdas[i] - dm.lambdas[j])[:, None] ** 2
        lnF[k] = -2.0 * (dl * np.sin(0.5 * w * t) ** 2 * coth / w**2).sum(axis=0)
        phi[k] = discrete_phase(dm, i, j, times)
    C = np.zeros((n_pr, n_pr), dtype=complex)
    for i in range(n_pr):
        for j in range(n_pr):
            prod = dm.mus[j] * np.conj(dm.mus[i])
            C[i, j] = np.sum(prod.real * coth[:, 0]) + 1j * np.sum(prod.imag)
        C[i, i] = 0.5 * C[i, i].real
    return TimeKernels(
        times=times, probes=dm.probes, n_levels=n_lv, A=A, B=B,
        F_abs=np.exp(lnF), phi=phi, C=C, temperature=temperature,
    )


@dataclass(frozen=True)
class FockTruncation:
    n_max: int = 30
    tail_tol: float = 1e-10

    def __post_init__(self):
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")


class TruncationError(RuntimeError):
    pass


@dataclass
class FockSystem:
    """Dense matrices for at most three modes in a truncated number basis."""

    dm: DiscreteModel
    trunc: FockTruncation = field(default_factory=FockTruncation)
    temperature: float = 0.0

    def __post_init__(self):
        if self.dm.n_modes > 3:
            raise ValueError("FockSystem supports at most 3 modes")
        n = self.trunc.n_max + 1
        a1 = np.diag(np.sqrt(np.arange(1, n)), k=1)
        eye = np.eye(n)
        self._a = []
        for k in range(self.dm.n_modes):
            op = np.array([[1.0]])
            for j in range(self.dm.n_modes):
                op = np.kron(op, a1 if j == k else eye)
            self._a.append(op)
        self.dim = n**self.dm.n_modes
        self._eig: dict = {}

    @cached_property
    def H0(self) -> np.ndarray:
        return sum(w * a.T @ a for w, a in zip(self.dm.omegas, self._a))

    def field(self, coeffs) -> np.ndarray:
        """sum_q c_q a_q^dag + conj(c_q) a_q."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for c, a in zip(coeffs, self._a):
            out += c * a.T + np.conj(c) * a
        return out

    def H(self, level: int) -> np.ndarray:
        return self.H0 + self.field(self.dm.lambdas[level])

    def Pi(self, alpha) -> np.ndarray:
        ia = alpha if isinstance(alpha, int) else self.dm.probes.index(alpha)
        return self.field(self.dm.mus[ia])

    @cached_property
    def rho(self) -> np.ndarray:
        n = self.trunc.n_max + 1
        diag = np.array([1.0])
        for w in self.dm.omegas:
            if self.temperature == 0:
                p = np.zeros(n)
                p[0] = 1.0
            else:
                p = np.exp(-w * np.arange(n) / self.temperature)
                p /= p.sum()
                if p[-1] > self.trunc.tail_tol:
                    raise TruncationError("thermal tail above tolerance; increase n_max")
            diag = np.kron(diag, p)
        return np.diag(diag).astype(complex)

    def propagator(self, level: int, t: float) -> np.ndarray:
        """exp(-i t H_level) from the eigendecomposition."""
        if level not in self._eig:
            self._eig[level] = np.linalg.eigh(self.H(level))
        E, V = self._eig[level]
        return (V * np.exp(-1j * t * E)) @ V.conj().T

    def expi(self, alpha, x: float) -> np.ndarray:
        """exp(i x Pi_alpha)."""
        key = ("Pi", alpha)
        if key not in self._eig:
            self._eig[key] = np.linalg.eigh(self.Pi(alpha))
        E, V = self._eig[key]
        return (V * np.exp(1j * x * E)) @ V.conj().T

    def top_population(self, state: np.ndarray) -> float:
        n = self.trunc.n_max + 1
        idx = np.indices((n,) * self.dm.n_modes).reshape(self.dm.n_modes, -1)
        at_top = np.any(idx == n - 1, axis=0)
        return float(np.real(np.diag(state))[at_top].sum())

    def check_unitary(self, U: np.ndarray, tol: float = 1e-10) -> float:
        dev = float(np.max(np.abs(U.conj().T @ U - np.eye(self.dim))))
        if dev > tol:
            raise TruncationError(f"propagator not unitary (deviation {dev:.2e})")
        return dev

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.rho @ op))


def fock_generating(
    dm: DiscreteModel,
    trunc: FockTruncation,
    l1: int,
    l2: int,
    t: float,
    X: Mapping[str, float] | Sequence[float] | None = None,
    temperature: float = 0.0,
    *,
    system: FockSystem | None = None,
) -> complex:
    """< e^{itH_l1} prod_a exp(i X_a Pi_a) e^{-itH_l2} > by dense linear algebra."""
    fs = system or FockSystem(dm, trunc, temperature)
    if X is None:
        X = {}
    if not isinstance(X, Mapping):
        X = dict(zip(dm.probes, X))
    U1 = fs.propagator(l1, t)
    U2 = fs.propagator(l2, t)
    fs.check_unitary(U1)
    fs.check_unitary(U2)
    for U in (U1, U2):
        if fs.top_population(U @ fs.rho @ U.conj().T) > trunc.tail_tol:
            raise TruncationError("population reaches n_max; increase n_max")
    op = U1.conj().T
    for alpha in dm.probes:
        x = X.get(alpha, 0.0)
        if x != 0.0:
            op = op @ fs.expi(alpha, x)
    op = op @ U2
    return fs.expectation(op)


@dataclass(frozen=True)
class FockCase:
    dm: DiscreteModel
    trunc: FockTruncation
    temperature: float
    t: float
    X: tuple[float, ...]


def random_fock_cases(n: int, seed: int = 0) -> list[FockCase]:
    """Randomised <= 2-mode cases: |lambda|, |mu| <= 0.5, w in [0.5, 3], t in [0, 5]."""
    rng = np.random.default_rng(seed)
    cases = []
    for k in range(n):
        n_modes = int(rng.integers(1, 3))
        w = np.sort(rng.uniform(0.5, 3.0, n_modes))
        r = rng.uniform(0.0, 0.5, (4, n_modes))
        ph = rng.uniform(0.0, 2.0 * np.pi, (4, n_modes))
        z = r * np.exp(1j * ph)
        dm = DiscreteModel(w, z[:2], z[2:], ("a", "b"))
        # thermal tail exp(-w n_max / T) stays below 1e-10 for T = 0.4
        temperature = 0.0 if k % 2 == 0 else 0.4
        trunc = FockTruncation(n_max=20 if n_modes == 2 else 40)
        cases.append(FockCase(dm, trunc, temperature, float(rng.uniform(0, 5)),
                              tuple(rng.uniform(-1.0, 1.0, 2))))
    return cases


def fock_deviation(case: FockCase) -> float:
    """Max |K - Fock| over all level pairs; n_max grows until the tail check passes."""
    from .generating import generating

    kern = discrete_kernels(case.dm, [case.t], case.temperature)
    trunc = case.trunc
    while True:
        fs = FockSystem(case.dm, trunc, case.temperature)
        try:
            dev = 0.0
            for l1 in range(case.dm.n_levels):
                for l2 in range(case.dm.n_levels):
                    ref = fock_generating(case.dm, trunc, l1, l2, case.t, case.X,
                                          case.temperature, system=fs)
                    dev = max(dev, abs(ref - generating(kern, l1, l2, case.t, case.X)))
            return dev
        except TruncationError:
            if trunc.n_max >= 2 * case.trunc.n_max:
                raise
            trunc = FockTruncation(trunc.n_max + 4, trunc.tail_tol)


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


ROUTE_LATTICE = tuple((x, t) for x in (0.0, 1.0, 2.0, 4.0) for t in (0.5, 1.5, 3.0))


def route_deviations(lattice=ROUTE_LATTICE, g: float = 2.5, L: float = 100.0):
    """(closed vs continuum quadrature, closed vs discrete L-box) over (x, t) points."""
    from .kernels import kernel_A, kernel_B, log_F_abs
    from .onedim import OneDimModel, closed_A, closed_B, closed_log_F12, discretize, export_spectral

    quad_dev = 0.0
    disc_dev = 0.0
    xs = sorted({x for x, _ in lattice})
    ts = sorted({t for _, t in lattice})
    model = OneDimModel(g=g, probes={f"x{i}": x for i, x in enumerate(xs)})
    spectral = export_spectral(model)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        disc = discrete_kernels(discretize(model, L), ts)
    for x, t in lattice:
        label = f"x{xs.index(x)}"
        cA, cB = closed_A(model, x, t), closed_B(model, x, t)
        quad_dev = max(quad_dev, abs(cA - kernel_A(spectral, label, 0, t)),
                       abs(cB - kernel_B(spectral, label, 0, t)))
        disc_dev = max(disc_dev, abs(cA - disc.a(label, 0, t)), abs(cB - disc.b(label, 0, t)))
    for t in ts:
        lnF = closed_log_F12(model, t)
        quad_dev = max(quad_dev, abs(np.exp(lnF) - np.exp(log_F_abs(spectral, 0, 1, t))))
        disc_dev = max(disc_dev, abs(np.exp(lnF) - disc.F(0, 1, t).real))
    return quad_dev, disc_dev


def run_suite(quick: bool = False) -> list[CheckResult]:
    """Oracle checks at the tolerances the library promises."""
    cases = random_fock_cases(6 if quick else 20)
    fock = max(fock_deviation(c) for c in cases)
    lattice = ROUTE_LATTICE[::3] if quick else ROUTE_LATTICE
    quad_dev, disc_dev = route_deviations(lattice)
    return [
        CheckResult("gaussian K vs truncated Fock", fock, 1e-6),
        CheckResult("1D closed form vs continuum quadrature", quad_dev, 1e-6),
        CheckResult("1D closed form vs discrete modes (L=100a)", disc_dev, 1e-3),
    ]
