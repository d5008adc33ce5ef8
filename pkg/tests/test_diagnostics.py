import math

import numpy as np
import pytest
import scipy.linalg

from qkt.diagnostics import (
    TimeSeries,
    fit_exponential_approach,
    fluctuation_stats,
    fotoc,
    fraction_of_max_by,
    lambda_oe,
    lambda_q,
    linear_fit,
    oe_series,
    otoc,
    otoc_ensemble,
    revival_depth,
    saturation_mean,
)
from qkt.entropy import half_half_partition, observational_entropy
from qkt.errors import DimensionMismatch, DomainError, NumericalError, WindowError
from qkt.kicked_top import KickedTopParams, floquet_unitary
from qkt.spin import SpinSpace, build_jy, build_jz, coherent_state


def test_otoc_matches_matrix_exponential_oracle():
    space = SpinSpace.from_j(1)
    kappa, alpha = 3.0, 1.2
    jz, jy = build_jz(space), build_jy(space)
    U_oracle = scipy.linalg.expm(-1j * kappa / (2 * space.j) * jz @ jz) @ scipy.linalg.expm(
        -1j * alpha * jy
    )
    U = floquet_unitary(KickedTopParams(space, kappa, alpha))
    np.testing.assert_allclose(U, U_oracle, atol=1e-10)

    psi = coherent_state(space, 0.8, 1.7)
    series = otoc(psi, jz, U, 6)
    for t in range(7):
        Ut = np.linalg.matrix_power(U_oracle, t)
        a_t = Ut.conj().T @ jz @ Ut
        comm = a_t @ jz - jz @ a_t
        expected = -0.5 * np.vdot(psi, comm @ comm @ psi)
        assert abs(expected.imag) < 1e-12
        assert series.values[t] == pytest.approx(expected.real, abs=1e-10)


def test_otoc_starts_at_zero_and_stays_non_negative():
    space = SpinSpace.from_dim(40)
    U = floquet_unitary(KickedTopParams(space, 7.0))
    series = otoc(coherent_state(space, 1.0, 1.0), build_jz(space), U, 10, kappa=7.0)
    assert series.values[0] == pytest.approx(0.0, abs=1e-12)
    assert np.all(series.values >= 0)
    assert series.meta == {"quantity": "otoc", "kappa": 7.0}


def test_otoc_ensemble_matches_single_states():
    space = SpinSpace.from_dim(20)
    U = floquet_unitary(KickedTopParams(space, 4.0))
    states = [coherent_state(space, t, p) for t, p in [(0.3, 0.2), (1.5, 3.0), (2.5, 6.0)]]
    values = otoc_ensemble(states, build_jz(space), U, 5)
    assert values.shape == (3, 6)
    for row, psi in zip(values, states):
        np.testing.assert_allclose(row, otoc(psi, build_jz(space), U, 5).values, rtol=1e-10, atol=1e-9)


def test_otoc_needs_a_step():
    space = SpinSpace(4)
    U = floquet_unitary(KickedTopParams(space, 1.0))
    with pytest.raises(DomainError):
        otoc(coherent_state(space, 1.0, 1.0), build_jz(space), U, 0)


def test_otoc_dimension_mismatch():
    U = floquet_unitary(KickedTopParams(SpinSpace(4), 1.0))
    with pytest.raises(DimensionMismatch):
        otoc(coherent_state(SpinSpace(3), 1.0, 1.0), build_jz(SpinSpace(4)), U, 2)


def test_fotoc_without_perturbation_is_zero():
    space = SpinSpace.from_dim(30)
    U = floquet_unitary(KickedTopParams(space, 2.5))
    series = fotoc(coherent_state(space, 0.7, 0.7), 0.0, U, 8)
    np.testing.assert_allclose(series.values, 0.0, atol=1e-12)


def test_fotoc_is_bounded():
    space = SpinSpace.from_dim(30)
    U = floquet_unitary(KickedTopParams(space, 7.0))
    series = fotoc(coherent_state(space, 0.7, 0.7), 0.01, U, 40)
    assert series.meta["delta"] == 0.01
    assert np.all((series.values >= -1e-12) & (series.values <= 1 + 1e-12))
    assert series.values[0] < series.values[-1]


def test_oe_series():
    space = SpinSpace.from_dim(16)
    U = floquet_unitary(KickedTopParams(space, 7.0))
    cg = half_half_partition(16)
    psi = coherent_state(space, 1.0, 2.0)
    series = oe_series(psi, cg, U, 10)
    assert len(series) == 11
    assert series.values[0] == pytest.approx(observational_entropy(psi, cg).total)
    assert series.meta["coarse_graining"] == cg.label
    assert np.all(series.values <= math.log(16) + 1e-12)


def test_time_series_validation():
    with pytest.raises(NumericalError):
        TimeSeries.from_values([0.0, math.nan])
    with pytest.raises(DimensionMismatch):
        TimeSeries(np.arange(3), np.zeros(2))


def test_linear_fit():
    fit = linear_fit([1, 2, 3, 4], [3, 5, 7, 9])
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(1.0)
    assert fit.residual == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(WindowError):
        linear_fit([1.0], [2.0])


def test_fit_exponential_approach_recovers_rate():
    steps = np.arange(51)
    series = TimeSeries.from_values(6.0 - np.exp(1.5 - 0.4 * steps))
    fit = fit_exponential_approach(series, 6.0, (0, 5))
    assert fit.slope == pytest.approx(-0.4)
    assert fit.intercept == pytest.approx(1.5)
    assert fit.window == (0, 5)
    assert fit.residual == pytest.approx(0.0, abs=1e-9)


def test_fit_exponential_approach_errors():
    series = TimeSeries.from_values([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(WindowError):
        fit_exponential_approach(series, 5.0, (0, 10))
    with pytest.raises(DomainError):
        fit_exponential_approach(series, 3.5, (0, 3))


def test_growth_rates():
    series = TimeSeries.from_values([0.0, 1.0, 3.0, 6.0, 7.0])
    assert lambda_oe(series) == pytest.approx(3.0)
    otoc_like = TimeSeries.from_values(np.exp(2 * 0.3 * np.arange(5)))
    assert lambda_q(otoc_like) == pytest.approx(0.3)
    with pytest.raises(WindowError):
        lambda_oe(TimeSeries.from_values([0.0, 1.0, 2.0]))
    with pytest.raises(DomainError):
        lambda_q(TimeSeries.from_values([0.0, 0.0, 0.0, 1.0]))


def test_fluctuation_stats():
    series = TimeSeries.from_values([0.0, 5.0, 1.0, 3.0, 1.0, 3.0])
    stats = fluctuation_stats(series, 2)
    assert stats.mean == pytest.approx(2.0)
    assert stats.std == pytest.approx(1.0)
    assert stats.max_excursion == pytest.approx(1.0)
    with pytest.raises(WindowError):
        fluctuation_stats(series, 5)


def test_saturation_mean():
    series = TimeSeries.from_values(np.arange(10.0))
    assert saturation_mean(series, 2, 4) == pytest.approx(3.0)
    with pytest.raises(WindowError):
        saturation_mean(series, 20, 30)


def test_revival_depth_and_fraction_of_max():
    series = TimeSeries.from_values([0.0, 1.0, 2.0, 4.0, 1.0, 4.0])
    assert revival_depth(series, 2) == pytest.approx(0.25)
    assert fraction_of_max_by(series, 2) == pytest.approx(0.5)
    assert fraction_of_max_by(series, 3) == pytest.approx(1.0)
