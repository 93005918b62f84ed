import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bosonic_meter.generating import (
    MAX_MOMENT_ORDER,
    GeneratingPoint,
    K_diag,
    K_offdiag,
    generating,
    moment,
)
from bosonic_meter.oracle import (
    DiscreteModel,
    FockSystem,
    FockTruncation,
    discrete_kernels,
    fock_deviation,
    fock_generating,
    random_fock_cases,
)


@pytest.fixture(scope="module")
def two_mode():
    dm = DiscreteModel(
        [0.9, 1.7],
        [[0.3 + 0.1j, -0.2j], [-0.25, 0.15 + 0.2j]],
        [[0.4, 0.1 - 0.2j], [0.2j, -0.3]],
        ("a", "b"),
    )
    return dm, discrete_kernels(dm, [0.0, 0.8, 2.6])


def test_unit_at_X_zero(two_mode):
    _, k = two_mode
    for lvl in (0, 1):
        assert K_diag(k, lvl, 2.6) == 1.0
    assert K_offdiag(k, 0, 1, 2.6) == pytest.approx(k.F(0, 1, 2.6))


def test_time_zero_is_thermal_characteristic(two_mode):
    _, k = two_mode
    X = {"a": 0.7, "b": -0.4}
    for l1, l2 in ((0, 0), (0, 1), (1, 0)):
        assert generating(k, l1, l2, 0.0, X) == pytest.approx(generating(k, 1, 1, 0.0, X))


def test_offdiag_rejects_equal_levels(two_mode):
    with pytest.raises(ValueError):
        K_offdiag(two_mode[1], 1, 1, 0.8)


def test_unknown_probe(two_mode):
    with pytest.raises(KeyError):
        generating(two_mode[1], 0, 1, 0.8, {"zz": 1.0})
    with pytest.raises(KeyError):
        generating(two_mode[1], 0, 1, 0.8, [1.0])


@pytest.mark.parametrize("temperature", [0.0, 0.4])
@pytest.mark.parametrize("X", [(0.0, 0.0), (0.6, 0.0), (-0.3, 0.8)])
def test_fock_agreement(two_mode, temperature, X):
    dm, _ = two_mode
    trunc = FockTruncation(n_max=18)
    fs = FockSystem(dm, trunc, temperature)
    k = discrete_kernels(dm, [2.6], temperature)
    for l1 in (0, 1):
        for l2 in (0, 1):
            ref = fock_generating(dm, trunc, l1, l2, 2.6, X, temperature, system=fs)
            assert abs(generating(k, l1, l2, 2.6, X) - ref) < 1e-8


def test_random_fock_cases():
    assert max(fock_deviation(c) for c in random_fock_cases(4, seed=11)) < 1e-6


def test_first_and_second_moments(two_mode):
    _, k = two_mode
    t = 0.8
    for lvl in (0, 1):
        assert moment(k, lvl, lvl, t, {"a": 1}) == pytest.approx(2 * k.a("a", lvl, t))
    # <Pi_a^2> - <Pi_a>^2 = 2 C_aa for either level
    m2 = moment(k, 0, 0, t, {"a": 2})
    m1 = moment(k, 0, 0, t, {"a": 1})
    assert (m2 - m1**2).real == pytest.approx(2 * k.C[0, 0].real)


def test_moments_against_fock(two_mode):
    dm, _ = two_mode
    t = 0.8
    trunc = FockTruncation(n_max=18)
    fs = FockSystem(dm, trunc)
    k = discrete_kernels(dm, [t])
    U0, U1 = fs.propagator(0, t), fs.propagator(1, t)
    Pa, Pb = fs.Pi("a"), fs.Pi("b")
    # ordering follows the probe list: Pi_a^n Pi_b^m
    for (l1, U), (l2, V) in [((0, U0), (1, U1)), ((1, U1), (1, U1))]:
        for n, m in [(1, 0), (2, 1), (1, 2), (3, 0)]:
            op = U.conj().T @ np.linalg.matrix_power(Pa, n) @ np.linalg.matrix_power(Pb, m) @ V
            ref = fs.expectation(op)
            assert abs(moment(k, l1, l2, t, (n, m)) - ref) < 1e-8


def test_moment_depth_limit(two_mode):
    _, k = two_mode
    with pytest.raises(ValueError, match="exceeds"):
        moment(k, 0, 0, 0.8, {"a": MAX_MOMENT_ORDER + 1})
    with pytest.raises(ValueError):
        moment(k, 0, 0, 0.8, {"a": -1})


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.sampled_from([0.8, 2.6]))
def test_diagonal_modulus_even_in_X(two_mode, x, y, t):
    _, k = two_mode
    for lvl in (0, 1):
        assert abs(K_diag(k, lvl, t, (x, y))) == pytest.approx(abs(K_diag(k, lvl, t, (-x, -y))))
        assert abs(K_diag(k, lvl, t, (x, y))) <= 1.0 + 1e-12


def test_generating_point(two_mode):
    _, k = two_mode
    pt = GeneratingPoint(0.8, (0.1, 0.2), (0, 1))
    assert pt.evaluate(k) == generating(k, 0, 1, 0.8, (0.1, 0.2))
    with pytest.raises(ValueError):
        GeneratingPoint(0.8, (np.nan, 0.0), (0, 1))
    with pytest.raises(ValueError):
        GeneratingPoint(-1.0, (0.0, 0.0), (0, 1))
