import math

import numpy as np
import pytest

from bosonic_meter.bell import (
    BellConfig,
    ScanRow,
    b2_matrix_element,
    bell_f,
    bell_f_t0,
    f_effective,
    optimal_config,
    optimal_z,
    violation_scan,
    word_log_expectation,
)
from bosonic_meter.model import ModelError, SystemSpec
from bosonic_meter.onedim import OneDimModel, closed_log_F12
from bosonic_meter.oracle import DiscreteModel, FockSystem, FockTruncation

T0 = 3.0


@pytest.fixture(scope="module")
def strong():
    return OneDimModel(g=10.0)


@pytest.fixture(scope="module")
def config(strong, plus):
    return optimal_config(strong, plus, T0)


@pytest.fixture(scope="module")
def plus():
    return SystemSpec.pure((0.0, 0.0), np.array([1.0, 1.0]) / math.sqrt(2.0))


def test_optimal_values(strong, plus, config):
    z, gamma, theta = optimal_z(strong, plus, T0)
    assert gamma == pytest.approx(-0.12673936085251972, rel=1e-9)
    assert theta == 0.0
    assert config.alpha == pytest.approx(0.8937068165946773, rel=1e-9)
    assert config.beta == pytest.approx(0.44865145265808276, rel=1e-9)
    assert 2 * abs(z) == pytest.approx(2.2289017322364497, rel=1e-9)


def test_f_at_t0_is_two_abs_z(strong, plus, config):
    z, _, _ = optimal_z(strong, plus, T0)
    assert bell_f(strong, plus, config, T0) == pytest.approx(2 * abs(z), abs=1e-10)
    assert bell_f_t0(strong, plus, config) == pytest.approx(2 * abs(z), abs=1e-14)


def test_f_t0_formula_general_angles(strong, plus):
    cfg = BellConfig(t0=2.0, theta=0.7, alpha=0.6, beta=0.8, gamma=-0.2)
    assert bell_f(strong, plus, cfg, 2.0) == pytest.approx(bell_f_t0(strong, plus, cfg), abs=1e-10)


def test_separable_mixture_stays_classical(strong, plus, config):
    for t in (1.0, T0, 5.0):
        assert abs(f_effective(strong, plus, config, t)) <= 2.0


def test_no_coherence_no_violation(strong):
    spec = SystemSpec((0.0, 0.0), np.diag([0.7, 0.3]))
    cfg = optimal_config(strong, spec, T0)
    assert abs(bell_f(strong, spec, cfg, T0)) <= 2.0
    assert cfg.beta == pytest.approx(0.0, abs=1e-15)


def test_population_swap_invariance(strong):
    rho = np.array([[0.7, 0.2 + 0.1j], [0.2 - 0.1j, 0.3]])
    a = optimal_z(strong, SystemSpec((0.0, 0.0), rho), T0)[0]
    b = optimal_z(strong, SystemSpec((0.0, 0.0), rho[::-1, ::-1].copy()), T0)[0]
    assert abs(a) == pytest.approx(abs(b))


def test_gamma_zero_removes_B1(strong, plus):
    cfg = BellConfig(t0=T0, theta=0.0, alpha=1.0, beta=0.0, gamma=0.0)
    assert bell_f(strong, plus, cfg, T0) == 0.0


@pytest.mark.parametrize("delta", [0.05, -0.05])
def test_rotating_away_lowers_f(strong, plus, config, delta):
    phi = math.atan2(config.beta, config.alpha) + delta
    cfg = BellConfig(config.t0, config.theta, math.cos(phi), math.sin(phi), config.gamma)
    assert bell_f_t0(strong, plus, cfg) < bell_f_t0(strong, plus, config)


def test_b2_at_t0(strong):
    # <e^{it0H0} cos(Xi + theta/2) e^{-it0H1}> = (e^{i theta/2} + e^{-i theta/2} F^4) / 2
    F4 = math.exp(4 * closed_log_F12(strong, T0))
    theta = 0.9
    expected = 0.5 * (np.exp(0.5j * theta) + np.exp(-0.5j * theta) * F4)
    assert b2_matrix_element(strong, T0, theta, T0) == pytest.approx(expected, abs=1e-10)


def test_word_against_single_mode_fock():
    w, lam = 1.3, 0.4
    word = [(0, 0.7, True), (0, 1.9, False), (1, 1.9, True), (1, 0.7, False)]
    dm = DiscreteModel([w], [[lam], [-lam]], np.zeros((0, 1)))
    fs = FockSystem(dm, FockTruncation(n_max=40))
    op = np.eye(fs.dim, dtype=complex)
    for level, s, adjoint in word:
        U = fs.propagator(level, s)
        op = op @ (U.conj().T if adjoint else U)
    ref = fs.expectation(op)
    got = np.exp(lam**2 * word_log_expectation(word, np.array([w]))[0])
    assert abs(got - ref) < 1e-10


def test_open_word_rejected():
    with pytest.raises(ValueError, match="close"):
        word_log_expectation([(0, 1.0, False)], np.array([1.0]))


def test_config_validation():
    with pytest.raises(ValueError):
        BellConfig(1.0, 0.0, 0.5, 0.5, 0.1)
    with pytest.raises(ValueError):
        BellConfig(-1.0, 0.0, 1.0, 0.0, 0.1)


def test_two_levels_required(strong):
    with pytest.raises(ModelError):
        optimal_z(strong, SystemSpec((0, 1, 2), np.eye(3) / 3), T0)


def test_scan(strong, plus):
    rows = violation_scan(strong, plus, [1.0, T0], [2.0, 10.0], threads=2)
    assert len(rows) == 4
    assert rows == violation_scan(strong, plus, [1.0, T0], [2.0, 10.0])
    assert len(ScanRow.HEADER) == len(rows[0].as_tuple())
    assert any(r.violated for r in rows)
    assert all(r.violated == (r.two_abs_z > 2) for r in rows)
    with pytest.raises(ValueError):
        violation_scan(strong, plus, [], [1.0])


def test_f_t0_with_phases_and_energies(strong):
    rho = np.array([[0.5, 0.3 * np.exp(0.8j)], [0.3 * np.exp(-0.8j), 0.5]])
    spec = SystemSpec((0.2, -0.4), rho)
    for theta in (0.0, 1.1):
        cfg = BellConfig(t0=2.0, theta=theta, alpha=0.6, beta=0.8, gamma=-0.2)
        assert bell_f(strong, spec, cfg, 2.0) == pytest.approx(bell_f_t0(strong, spec, cfg),
                                                               abs=1e-10)
