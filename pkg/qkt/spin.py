"""Angular momentum operators, rotations and spin coherent states.

All matrices are dense ``complex128`` arrays in the |j,m> basis with
descending m: basis index ``q`` holds ``m = j - q``, so ``q = 0`` is |j,j>
and ``q = d - 1`` is |j,-j>.
"""

import functools
import logging
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg
from scipy.special import entr, gammaln, xlogy

from qkt import settings
from qkt.errors import DomainError, NotDensityMatrix, NotHermitian

logger = logging.getLogger(__name__)

Axis = Literal["x", "y", "z"]


@dataclass(frozen=True)
class SpinSpace:
    """Hilbert space of a single spin j, stored as the integer 2j."""

    two_j: int

    def __post_init__(self):
        if self.two_j < 0:
            raise DomainError(f"2j must be a non-negative integer, got {self.two_j}")

    @classmethod
    def from_j(cls, j: float) -> "SpinSpace":
        two_j = round(2 * j)
        if two_j < 0 or abs(2 * j - two_j) > 1e-9:
            raise DomainError(f"j must be a non-negative half-integer, got {j}")
        return cls(two_j)

    @classmethod
    def from_dim(cls, d: int) -> "SpinSpace":
        if int(d) != d or d < 1:
            raise DomainError(f"dimension must be a positive integer, got {d}")
        return cls(int(d) - 1)

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def dim(self) -> int:
        return self.two_j + 1

    @property
    def m_values(self) -> np.ndarray:
        return self.j - np.arange(self.dim)

    def __str__(self) -> str:
        label = str(self.two_j // 2) if self.two_j % 2 == 0 else f"{self.two_j}/2"
        return f"j={label} (d={self.dim})"


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix.flags.writeable = False
    return matrix


@functools.lru_cache(maxsize=64)
def build_jz(space: SpinSpace) -> np.ndarray:
    """J_z, diagonal with entry m = j - q at index q."""
    return _frozen(np.diag(space.m_values).astype(np.complex128))


@functools.lru_cache(maxsize=64)
def _lowering(space: SpinSpace) -> np.ndarray:
    m = space.m_values[:-1]
    coeff = np.sqrt(space.j * (space.j + 1) - m * (m - 1))
    return _frozen(np.diag(coeff, k=-1).astype(np.complex128))


def build_ladder(space: SpinSpace, lowering: bool = True) -> np.ndarray:
    """J_- (or J_+ when ``lowering`` is False).

    <j,m-1|J_-|j,m> = sqrt(j(j+1) - m(m-1)); J_+ is the adjoint of J_-.
    """
    j_minus = _lowering(space)
    return j_minus if lowering else _frozen(j_minus.conj().T.copy())


@functools.lru_cache(maxsize=64)
def build_jx(space: SpinSpace) -> np.ndarray:
    j_minus = build_ladder(space)
    j_plus = build_ladder(space, lowering=False)
    return _frozen((j_plus + j_minus) / 2)


@functools.lru_cache(maxsize=64)
def build_jy(space: SpinSpace) -> np.ndarray:
    j_minus = build_ladder(space)
    j_plus = build_ladder(space, lowering=False)
    return _frozen((j_plus - j_minus) / 2j)


def build_component(space: SpinSpace, axis: Axis) -> np.ndarray:
    builders = {"x": build_jx, "y": build_jy, "z": build_jz}
    if axis not in builders:
        raise DomainError(f"axis must be one of x, y, z; got {axis!r}")
    return builders[axis](space)


def spin_operators(space: SpinSpace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(J_x, J_y, J_z)."""
    return build_jx(space), build_jy(space), build_jz(space)


def casimir(space: SpinSpace) -> np.ndarray:
    """J_x^2 + J_y^2 + J_z^2, which equals j(j+1) times the identity."""
    jx, jy, jz = spin_operators(space)
    return jx @ jx + jy @ jy + jz @ jz


@functools.lru_cache(maxsize=64)
def _axis_eigh(space: SpinSpace, axis: Axis) -> tuple[np.ndarray, np.ndarray]:
    logger.debug("Diagonalizing J_%s for %s", axis, space)
    eigvals, eigvecs = scipy.linalg.eigh(build_component(space, axis))
    return _frozen(eigvals), _frozen(eigvecs)


def rotation(space: SpinSpace, axis: Axis, angle: float) -> np.ndarray:
    """exp(-i angle J_axis) through the Hermitian eigendecomposition of J_axis."""
    if not math.isfinite(angle):
        raise DomainError(f"rotation angle must be finite, got {angle}")
    if angle == 0:
        return np.eye(space.dim, dtype=np.complex128)
    if axis == "z":
        return np.diag(np.exp(-1j * angle * space.m_values))
    eigvals, eigvecs = _axis_eigh(space, axis)
    return (eigvecs * np.exp(-1j * angle * eigvals)) @ eigvecs.conj().T


def coherent_state(space: SpinSpace, theta: float, phi: float) -> np.ndarray:
    """Spin coherent state |theta, phi> = exp(beta J_-) |j,j> / (1 + |beta|^2)^j.

    With beta = e^{i phi} tan(theta/2) the amplitude at q = j - m is
    sqrt(C(2j, q)) cos(theta/2)^(2j-q) sin(theta/2)^q e^{i q phi}, evaluated
    in log space so that d ~ 1000 neither overflows nor underflows.
    """
    if not (0.0 <= theta <= math.pi):
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    if not (0.0 <= phi < 2 * math.pi):
        raise DomainError(f"phi must lie in [0, 2pi), got {phi}")

    d = space.dim
    if abs(theta - math.pi) <= settings.COHERENT_POLE_TOL:
        psi = np.zeros(d, dtype=np.complex128)
        psi[-1] = np.exp(1j * space.two_j * phi)
        return psi

    q = np.arange(d)
    n = space.two_j
    log_amp = (
        0.5 * (gammaln(n + 1) - gammaln(q + 1) - gammaln(n - q + 1))
        + xlogy(q, math.sin(theta / 2))
        + xlogy(n - q, math.cos(theta / 2))
    )
    psi = np.exp(log_amp) * np.exp(1j * q * phi)
    return psi / np.linalg.norm(psi)


def basis_state(space: SpinSpace, q: int) -> np.ndarray:
    psi = np.zeros(space.dim, dtype=np.complex128)
    psi[q] = 1.0
    return psi


def expectation(psi: np.ndarray, op: np.ndarray) -> float:
    return float(np.real(np.vdot(psi, op @ psi)))


def check_hermitian(op: np.ndarray, tol: float = settings.DENSITY_TOL) -> None:
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise NotHermitian(f"operator must be square, got shape {op.shape}")
    deviation = np.max(np.abs(op - op.conj().T)) if op.size else 0.0
    if deviation > tol:
        raise NotHermitian(f"operator deviates from Hermitian by {deviation:.3e}")


def density_eigenvalues(rho: np.ndarray, tol: float = settings.DENSITY_TOL) -> np.ndarray:
    """Eigenvalues of ``rho`` after checking it is a density matrix."""
    try:
        check_hermitian(rho, tol)
    except NotHermitian as exc:
        raise NotDensityMatrix(str(exc)) from exc
    eigvals = scipy.linalg.eigvalsh(rho)
    if eigvals.min() < -tol:
        raise NotDensityMatrix(f"negative eigenvalue {eigvals.min():.3e}")
    trace = float(np.real(np.trace(rho)))
    if abs(trace - 1.0) > tol:
        raise NotDensityMatrix(f"trace is {trace:.12f}, expected 1")
    return np.clip(eigvals, 0.0, None)


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-Tr[rho log rho] in nats, with 0 log 0 = 0."""
    return float(entr(density_eigenvalues(rho)).sum())
