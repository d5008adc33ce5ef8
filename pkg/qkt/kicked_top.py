"""Floquet operator of the quantum kicked top and stroboscopic evolution.

U = exp(-i kappa/(2j) J_z^2) exp(-i alpha J_y), with hbar = tau = 1.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from qkt import settings
from qkt.errors import DimensionMismatch, DomainError, NumericalError
from qkt.spin import SpinSpace, check_hermitian, rotation, spin_operators

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KickedTopParams:
    space: SpinSpace
    kappa: float
    alpha: float = field(default=settings.DEFAULT_ALPHA)

    def __post_init__(self):
        if not math.isfinite(self.kappa) or not math.isfinite(self.alpha):
            raise DomainError(
                f"kappa and alpha must be finite, got {self.kappa}, {self.alpha}"
            )


def kick_phases(params: KickedTopParams) -> np.ndarray:
    """Diagonal of the kick factor, exp(-i kappa m^2 / (2j))."""
    m = params.space.m_values
    return np.exp(-1j * params.kappa * m**2 / (2 * params.space.j))


def floquet_unitary(params: KickedTopParams) -> np.ndarray:
    if params.space.two_j < 1:
        raise DomainError("the kicked top needs j > 0")
    logger.debug("Building Floquet matrix for %s, kappa=%s", params.space, params.kappa)
    rot = rotation(params.space, "y", params.alpha)
    # The kick is diagonal: scale the rows of the rotation.
    U = kick_phases(params)[:, None] * rot
    deviation = np.max(np.abs(U @ U.conj().T - np.eye(U.shape[0])))
    if deviation > settings.UNITARITY_TOL:
        raise NumericalError(f"Floquet matrix is not unitary (deviation {deviation:.3e})")
    return U


def _check_dims(U: np.ndarray, other: np.ndarray, what: str) -> None:
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise DimensionMismatch(f"Floquet matrix must be square, got {U.shape}")
    if other.shape[0] != U.shape[0]:
        raise DimensionMismatch(
            f"{what} has dimension {other.shape[0]}, Floquet matrix {U.shape[0]}"
        )


def iter_states(U: np.ndarray, psi0: np.ndarray, n: int) -> Iterator[np.ndarray]:
    """Yield U^t psi0 for t = 0..n, re-checking the norm at each step."""
    if n < 0:
        raise DomainError(f"number of steps must be >= 0, got {n}")
    _check_dims(U, psi0, "state")
    psi = np.asarray(psi0, dtype=np.complex128)
    drift = abs(np.linalg.norm(psi) - 1.0)
    if drift > settings.NORM_TOL:
        raise DomainError(f"initial state is not normalized (drift {drift:.3e})")
    yield psi
    for step in range(1, n + 1):
        psi = U @ psi
        drift = abs(np.linalg.norm(psi) - 1.0)
        if drift > settings.EVOLUTION_NORM_TOL:
            raise NumericalError(f"state norm drifted by {drift:.3e} at step {step}")
        yield psi


def evolve_state(U: np.ndarray, psi0: np.ndarray, n: int) -> list[np.ndarray]:
    """The n+1 states |psi(0)>, ..., |psi(n)> with |psi(t)> = U^t |psi(0)>."""
    return list(iter_states(U, psi0, n))


def iter_heisenberg(U: np.ndarray, A: np.ndarray, n: int) -> Iterator[np.ndarray]:
    """Yield A(t) = U^dagger A(t-1) U for t = 0..n."""
    if n < 0:
        raise DomainError(f"number of steps must be >= 0, got {n}")
    _check_dims(U, A, "operator")
    check_hermitian(A, settings.HERMITICITY_TOL)
    U_dag = U.conj().T
    op = np.asarray(A, dtype=np.complex128)
    yield op
    for step in range(1, n + 1):
        op = U_dag @ op @ U
        deviation = np.max(np.abs(op - op.conj().T))
        if deviation > settings.HERMITICITY_TOL:
            raise NumericalError(
                f"A(t) lost Hermiticity by {deviation:.3e} at step {step}"
            )
        yield op


def heisenberg_evolve(U: np.ndarray, A: np.ndarray, n: int) -> list[np.ndarray]:
    """A(0), ..., A(n) under A(t+1) = U^dagger A(t) U."""
    return list(iter_heisenberg(U, A, n))


def ehrenfest_time(space: SpinSpace, kappa: float) -> float:
    """t_E ~ log(2j+1) / log(kappa/2); defined for kappa > 2 only."""
    if not kappa > 2:
        raise DomainError(f"Ehrenfest estimate needs kappa > 2, got {kappa}")
    return math.log(space.dim) / math.log(kappa / 2)


def expectation_trajectory(
    states: list[np.ndarray], space: SpinSpace
) -> np.ndarray:
    """(X, Y, Z) = <J/j> for each state, shape (len(states), 3)."""
    if space.two_j < 1:
        raise DomainError("expectation trajectory needs j > 0")
    ops = spin_operators(space)
    out = np.empty((len(states), 3))
    for row, psi in enumerate(states):
        if psi.shape[0] != space.dim:
            raise DimensionMismatch(
                f"state has dimension {psi.shape[0]}, space {space.dim}"
            )
        for col, op in enumerate(ops):
            out[row, col] = np.real(np.vdot(psi, op @ psi)) / space.j
    return out
