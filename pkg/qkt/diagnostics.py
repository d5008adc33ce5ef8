"""Chaos diagnostics on kicked-top dynamics: OTOC, FOTOC, OE series and rates."""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import pandas as pd
from scipy.stats import linregress

from qkt import settings
from qkt.entropy import CoarseGraining, observational_entropy
from qkt.errors import DimensionMismatch, DomainError, NumericalError, WindowError
from qkt.kicked_top import iter_heisenberg, iter_states
from qkt.spin import SpinSpace, check_hermitian, rotation

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Values of one quantity at steps 0..n, with run metadata."""

    steps: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.steps) != len(self.values):
            raise DimensionMismatch(
                f"{len(self.steps)} steps but {len(self.values)} values"
            )
        if not np.all(np.isfinite(self.values)):
            raise NumericalError(f"non-finite values in series {self.meta}")

    @classmethod
    def from_values(cls, values: Sequence[float], **meta) -> "TimeSeries":
        values = np.asarray(values, dtype=float)
        return cls(np.arange(len(values)), values, dict(meta))

    def __len__(self) -> int:
        return len(self.values)

    def window(self, start: int, stop: int | None = None) -> np.ndarray:
        """Boolean mask of start <= step <= stop."""
        stop = self.steps[-1] if stop is None else stop
        return (self.steps >= start) & (self.steps <= stop)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"step": self.steps, "value": self.values})


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    window: tuple[float, float]
    residual: float


class FluctuationStats(NamedTuple):
    mean: float
    std: float
    max_excursion: float


def _check_state(psi: np.ndarray, U: np.ndarray) -> None:
    if psi.ndim != 1 or psi.shape[0] != U.shape[0]:
        raise DimensionMismatch(
            f"state of shape {psi.shape} does not match Floquet matrix {U.shape}"
        )


def otoc_ensemble(
    states: Sequence[np.ndarray], A: np.ndarray, U: np.ndarray, n: int
) -> np.ndarray:
    """OTOC of many pure states sharing one Heisenberg evolution of A.

    For Hermitian A the commutator C = [A(t), A] is anti-Hermitian, so
    -1/2 <psi|C^2|psi> = 1/2 ||C psi||^2. Returns shape (len(states), n+1).
    """
    if n < 1:
        raise DomainError(f"OTOC needs n >= 1, got {n}")
    check_hermitian(A, settings.HERMITICITY_TOL)
    for psi in states:
        _check_state(psi, U)
    logger.debug("OTOC of %d states over %d kicks", len(states), n)
    psis = np.column_stack(states)
    a_psis = A @ psis
    values = np.empty((psis.shape[1], n + 1))
    for t, a_t in enumerate(iter_heisenberg(U, A, n)):
        c_psis = a_t @ a_psis - A @ (a_t @ psis)
        values[:, t] = 0.5 * np.sum(np.abs(c_psis) ** 2, axis=0)
    return values


def otoc(
    psi: np.ndarray, A: np.ndarray, U: np.ndarray, n: int, **meta
) -> TimeSeries:
    """C(t) = -1/2 <psi|[A(t), A]^2|psi> for t = 0..n."""
    values = otoc_ensemble([psi], A, U, n)[0]
    return TimeSeries.from_values(values, quantity="otoc", **meta)


def fotoc_values(psi: np.ndarray, W: np.ndarray, U: np.ndarray, n: int) -> np.ndarray:
    _check_state(psi, U)
    if W.shape != U.shape:
        raise DimensionMismatch(f"perturbation {W.shape} vs Floquet matrix {U.shape}")
    values = np.empty(n + 1)
    for t, psi_t in enumerate(iter_states(U, psi, n)):
        # <psi|U^-t W U^t|psi> = <psi(t)|W|psi(t)>
        values[t] = 1.0 - abs(np.vdot(psi_t, W @ psi_t)) ** 2
    return values


def fotoc(
    psi: np.ndarray, delta: float, U: np.ndarray, n: int, **meta
) -> TimeSeries:
    """1 - |<psi|W_delta(t)|psi>|^2 with W_delta(0) a rotation about x by delta."""
    space = SpinSpace.from_dim(U.shape[0])
    W = rotation(space, "x", delta)
    values = fotoc_values(psi, W, U, n)
    return TimeSeries.from_values(values, quantity="fotoc", delta=delta, **meta)


def oe_values(psi: np.ndarray, cg: CoarseGraining, U: np.ndarray, n: int) -> np.ndarray:
    _check_state(psi, U)
    return np.array(
        [observational_entropy(psi_t, cg).total for psi_t in iter_states(U, psi, n)]
    )


def oe_series(
    psi: np.ndarray, cg: CoarseGraining, U: np.ndarray, n: int, **meta
) -> TimeSeries:
    values = oe_values(psi, cg, U, n)
    return TimeSeries.from_values(
        values, quantity="oe", coarse_graining=cg.label, **meta
    )


def _residual(x: np.ndarray, y: np.ndarray, slope: float, intercept: float) -> float:
    return float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))


def linear_fit(x: Sequence[float], y: Sequence[float]) -> FitResult:
    """Least-squares line through (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or len(x) != len(y):
        raise WindowError(f"linear fit needs >= 2 paired points, got {len(x)}, {len(y)}")
    fit = linregress(x, y)
    return FitResult(
        float(fit.slope),
        float(fit.intercept),
        (float(x[0]), float(x[-1])),
        _residual(x, y, fit.slope, fit.intercept),
    )


def fit_exponential_approach(
    series: TimeSeries,
    max_value: float,
    window: tuple[int, int] = settings.APPROACH_FIT_WINDOW,
) -> FitResult:
    """Fit log(max_value - value) against step over the inclusive window.

    The slope is negative for an exponential approach to saturation.
    """
    start, stop = window
    if start < series.steps[0] or stop > series.steps[-1] or stop - start < 1:
        raise WindowError(
            f"window {window} outside series steps "
            f"{series.steps[0]}..{series.steps[-1]}"
        )
    mask = series.window(start, stop)
    gap = max_value - series.values[mask]
    if np.any(gap <= 0):
        raise DomainError(
            f"max_value {max_value} does not exceed every value in window {window}"
        )
    fit = linear_fit(series.steps[mask], np.log(gap))
    return FitResult(fit.slope, fit.intercept, (start, stop), fit.residual)


def _growth_pair(series: TimeSeries) -> tuple[float, float]:
    step = settings.GROWTH_RATE_STEP
    if len(series) <= step:
        raise WindowError(f"growth rate needs at least {step + 1} steps, got {len(series)}")
    return float(series.values[step - 1]), float(series.values[step])


def lambda_oe(series: TimeSeries) -> float:
    """Initial OE growth rate: forward difference values[3] - values[2]."""
    before, after = _growth_pair(series)
    return after - before


def lambda_q(series: TimeSeries) -> float:
    """Quantum Lyapunov rate from C(t) ~ exp(2 lambda_q t) at the same step pair."""
    before, after = _growth_pair(series)
    if before <= 0 or after <= 0:
        raise DomainError(f"OTOC values must be positive, got {before}, {after}")
    return (math.log(after) - math.log(before)) / 2


def fluctuation_stats(series: TimeSeries, tail_start: int) -> FluctuationStats:
    if tail_start >= series.steps[-1] or tail_start < series.steps[0]:
        raise WindowError(
            f"tail start {tail_start} outside series ending at {series.steps[-1]}"
        )
    tail = series.values[series.window(tail_start)]
    mean = float(np.mean(tail))
    return FluctuationStats(
        mean, float(np.std(tail)), float(np.max(np.abs(tail - mean)))
    )


def saturation_mean(series: TimeSeries, start: int, stop: int) -> float:
    mask = series.window(start, stop)
    if start > series.steps[-1] or not mask.any():
        raise WindowError(f"window ({start}, {stop}) outside series")
    return float(np.mean(series.values[mask]))


def revival_depth(series: TimeSeries, start: int) -> float:
    """Smallest value / running-max ratio at steps after ``start``.

    A value well below 1 marks a revival: the quantity falls back after
    having grown.
    """
    running = np.maximum.accumulate(series.values)
    mask = (series.steps > start) & (running > 0)
    if not mask.any():
        raise WindowError(f"no positive values after step {start}")
    return float(np.min(series.values[mask] / running[mask]))


def fraction_of_max_by(series: TimeSeries, step: int) -> float:
    """max(values up to ``step``) / max(values)."""
    peak = float(np.max(series.values))
    if peak <= 0:
        raise DomainError("series has no positive values")
    return float(np.max(series.values[series.steps <= step])) / peak
