import math

import numpy as np
import pytest

from qkt.diagnostics import oe_series, otoc
from qkt.ensemble import (
    EnsembleSpec,
    Quantity,
    averaged_series,
    ensemble_values,
    member_rng,
    sample_angles,
    sample_states,
)
from qkt.entropy import half_half_partition, uniform_partition
from qkt.errors import DimensionMismatch, DomainError
from qkt.kicked_top import KickedTopParams, floquet_unitary
from qkt.spin import SpinSpace, build_jz


@pytest.fixture
def params():
    return KickedTopParams(SpinSpace.from_dim(16), 7.0)


def test_member_streams_are_reproducible():
    a = member_rng(42, 3).uniform(size=4)
    b = member_rng(42, 3).uniform(size=4)
    c = member_rng(42, 4).uniform(size=4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_members_do_not_depend_on_ensemble_size():
    small = sample_angles(EnsembleSpec(count=3, seed=9))
    large = sample_angles(EnsembleSpec(count=10, seed=9))
    np.testing.assert_array_equal(small[0], large[0][:3])
    np.testing.assert_array_equal(small[1], large[1][:3])


def test_single_state_is_bitwise_reproducible():
    space = SpinSpace.from_dim(50)
    spec = EnsembleSpec(count=1, seed=123)
    np.testing.assert_array_equal(sample_states(space, spec)[0], sample_states(space, spec)[0])


@pytest.mark.parametrize("sampling", ["uniform-theta-phi", "uniform-sphere"])
def test_sampled_states(sampling):
    spec = EnsembleSpec(count=100, seed=1, sampling=sampling)
    thetas, phis = sample_angles(spec)
    assert np.all((thetas >= 0) & (thetas <= math.pi))
    assert np.all((phis >= 0) & (phis < 2 * math.pi))
    states = sample_states(SpinSpace.from_dim(20), spec)
    assert len(states) == 100
    for psi in states:
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-10)


def test_spec_validation():
    with pytest.raises(DomainError):
        EnsembleSpec(count=0)
    with pytest.raises(DomainError):
        EnsembleSpec(sampling="gaussian")
    with pytest.raises(DomainError):
        EnsembleSpec(theta_range=(0.0, 4.0))


def test_quantity_validation():
    with pytest.raises(DomainError):
        Quantity("oe")
    with pytest.raises(DomainError):
        Quantity("entropy")


def test_single_member_average_equals_member_series(params):
    spec = EnsembleSpec(count=1, seed=5)
    cg = half_half_partition(16)
    psi = sample_states(params.space, spec)[0]
    U = floquet_unitary(params)
    averaged = averaged_series(params, Quantity("oe", cg), spec, 10)
    np.testing.assert_allclose(averaged.values, oe_series(psi, cg, U, 10).values, atol=1e-14)
    assert averaged.meta["count"] == 1
    assert averaged.meta["seed"] == 5
    assert averaged.meta["coarse_graining"] == cg.label


def test_otoc_average_is_mean_of_members(params):
    spec = EnsembleSpec(count=4, seed=8)
    U = floquet_unitary(params)
    expected = np.mean(
        [otoc(psi, build_jz(params.space), U, 6).values for psi in sample_states(params.space, spec)],
        axis=0,
    )
    averaged = averaged_series(params, Quantity("otoc"), spec, 6, U=U)
    np.testing.assert_allclose(averaged.values, expected, rtol=1e-10, atol=1e-9)


def test_ensemble_mean_within_member_range(params):
    spec = EnsembleSpec(count=12, seed=2)
    members = ensemble_values(params, Quantity("oe", half_half_partition(16)), spec, 15)
    mean = members.mean(axis=0)
    assert members.shape == (12, 16)
    assert np.all(mean >= members.min(axis=0) - 1e-12)
    assert np.all(mean <= members.max(axis=0) + 1e-12)


def test_fotoc_average(params):
    spec = EnsembleSpec(count=3, seed=4)
    averaged = averaged_series(params, Quantity("fotoc", delta=0.02), spec, 5)
    assert averaged.meta["delta"] == 0.02
    assert len(averaged) == 6


@pytest.mark.parametrize("kind", ["oe", "fotoc"])
def test_result_independent_of_worker_count(params, monkeypatch, kind):
    spec = EnsembleSpec(count=8, seed=77)
    quantity = Quantity(kind, coarse_graining=half_half_partition(16))
    monkeypatch.setenv("QKT_OE_THREADS", "1")
    serial = averaged_series(params, quantity, spec, 12).values
    monkeypatch.setenv("QKT_OE_THREADS", "4")
    threaded = averaged_series(params, quantity, spec, 12).values
    np.testing.assert_array_equal(serial, threaded)


def test_coarse_graining_must_match_space(params):
    with pytest.raises(DimensionMismatch):
        averaged_series(params, Quantity("oe", uniform_partition(8, 2)), EnsembleSpec(count=2), 3)
