import math

import numpy as np
import pytest

from bosonic_meter.onedim import OneDimModel, discretize
from bosonic_meter.oracle import (
    DiscreteModel,
    FockSystem,
    FockTruncation,
    TruncationError,
    discrete_kernels,
    fock_generating,
    route_deviations,
    run_suite,
)


def test_revival_warning():
    dm = discretize(OneDimModel(g=1.0), L=10.0)
    with pytest.warns(RuntimeWarning, match="revival"):
        discrete_kernels(dm, [12.0])


def test_discretised_box_layout():
    dm = discretize(OneDimModel(g=1.0), L=20.0)
    assert dm.revival_time == 20.0
    n = np.rint(dm.omegas * 2 * 20.0 / math.pi).astype(int)
    assert np.array_equal(n, np.arange(1, n.size + 1))
    # the qubit couples to the even modes only
    assert np.all(dm.lambdas[:, n % 2 == 1] == 0)
    assert np.all(dm.lambdas[:, n % 2 == 0] != 0)


def test_unitarity_and_truncation():
    dm = DiscreteModel([1.0], [[0.3], [-0.3]], [[0.2]])
    fs = FockSystem(dm, FockTruncation(n_max=25))
    assert fs.check_unitary(fs.propagator(0, 2.0)) < 1e-10
    strong = DiscreteModel([1.0], [[3.0], [-3.0]], [[0.2]])
    with pytest.raises(TruncationError):
        fock_generating(strong, FockTruncation(n_max=6), 0, 1, 2.0)


def test_thermal_tail_check():
    dm = DiscreteModel([0.1], [[0.1], [0.0]], [[0.1]])
    with pytest.raises(TruncationError, match="thermal tail"):
        FockSystem(dm, FockTruncation(n_max=5), temperature=2.0).rho


def test_mode_limit():
    with pytest.raises(ValueError):
        FockSystem(DiscreteModel([1, 2, 3, 4], np.zeros((2, 4)), np.zeros((0, 4))))


def test_input_validation():
    with pytest.raises(ValueError):
        DiscreteModel([2.0, 1.0], np.zeros((2, 2)), np.zeros((0, 2)))
    with pytest.raises(ValueError):
        DiscreteModel([1.0], np.zeros((2, 2)), np.zeros((0, 1)))


def test_single_mode_A():
    k = discrete_kernels(DiscreteModel([1.0], [[0.5]], [[0.3]]), [math.pi])
    assert k.A[0, 0, 0] == pytest.approx(-0.3, abs=1e-15)


def test_restrict():
    dm = DiscreteModel([1.0, 2.0], [[0.1, 0.2]], [[0.3, 0.4]])
    sub = dm.restrict([1])
    assert sub.n_modes == 1 and sub.lambdas[0, 0] == 0.2


def test_routes_agree():
    quad, disc = route_deviations(((0.0, 1.5), (2.0, 3.0)))
    assert quad < 1e-6
    assert disc < 1e-3


def test_quick_suite_passes():
    results = run_suite(quick=True)
    assert [r.name for r in results][0].startswith("gaussian K")
    assert all(r.passed for r in results), results
