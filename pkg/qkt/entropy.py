"""Coarse-grainings in the J_z eigenbasis and observational entropy.

A coarse-graining is a partition of the basis indices {0, ..., d-1} into
contiguous blocks. Its projectors Pi_i are diagonal, so the measurement
probabilities p_i = Tr(Pi_i rho) are partial sums of the diagonal of rho
(or of |psi_q|^2) and are never formed as matrices on the hot path.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
import scipy.linalg
from scipy.special import entr, rel_entr

from qkt import settings
from qkt.errors import (
    DimensionMismatch,
    DomainError,
    IndivisibleBlock,
    NumericalError,
    SupportMismatch,
)
from qkt.spin import density_eigenvalues

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoarseGraining:
    """Ordered contiguous blocks over the basis, stored as block lengths."""

    dim: int
    lengths: tuple[int, ...]
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if any(v < 1 for v in self.lengths):
            raise DomainError(f"block volumes must be >= 1, got {self.lengths}")
        if sum(self.lengths) != self.dim:
            raise DomainError(
                f"block volumes sum to {sum(self.lengths)}, dimension is {self.dim}"
            )

    @property
    def volumes(self) -> np.ndarray:
        return np.asarray(self.lengths, dtype=np.int64)

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate(([0], np.cumsum(self.lengths)[:-1])).astype(np.int64)

    @property
    def n_blocks(self) -> int:
        return len(self.lengths)

    @property
    def blocks(self) -> list[range]:
        return [range(s, s + v) for s, v in zip(self.starts, self.lengths)]

    def projector(self, i: int) -> np.ndarray:
        """Dense projector Pi_i (for cross-checks on small spaces)."""
        diag = np.zeros(self.dim)
        diag[self.blocks[i]] = 1.0
        return np.diag(diag).astype(np.complex128)


class OEResult(NamedTuple):
    total: float
    shannon: float
    boltzmann: float
    probs: np.ndarray


class RetrodictionCheck(NamedTuple):
    lhs: float
    kl: float
    umegaki: float


def uniform_partition(d: int, mu: int) -> CoarseGraining:
    if not 1 <= mu <= d or d % mu:
        raise IndivisibleBlock(f"block size {mu} does not divide dimension {d}")
    return CoarseGraining(d, (mu,) * (d // mu), label=f"uniform(mu={mu})")


def mixed_partition(
    d: int, mu_low: int, mu_high: int, low_first: bool = True
) -> CoarseGraining:
    """Half of the space in blocks of ``mu_low``, the other half in ``mu_high``.

    With ``low_first`` the ``mu_low`` half covers the low-q (high-m) indices.
    """
    if d % 2 or (d // 2) % mu_low or (d // 2) % mu_high:
        raise IndivisibleBlock(
            f"dimension {d} cannot be split in halves of blocks {mu_low} and {mu_high}"
        )
    half = d // 2
    low = (mu_low,) * (half // mu_low)
    high = (mu_high,) * (half // mu_high)
    lengths = low + high if low_first else high + low
    side = "low-q" if low_first else "high-q"
    return CoarseGraining(
        d, lengths, label=f"mixed(mu={mu_low}|{mu_high}, {mu_low} on {side})"
    )


def half_half_partition(d: int, low_first: bool = True) -> CoarseGraining:
    """Blocks of 2 over one half of the space and blocks of 4 over the other."""
    if d % 8:
        raise IndivisibleBlock(f"half-half coarse-graining needs 8 | d, got d={d}")
    cg = mixed_partition(d, 2, 4, low_first)
    return replace(cg, label="half-half" if low_first else "half-half(reversed)")


def padded_partition(d: int, mu: int) -> CoarseGraining:
    """Blocks of ``mu``; the remainder d mod mu is merged into the last block."""
    if mu < 1:
        raise DomainError(f"block size must be >= 1, got {mu}")
    count = d // mu
    if count == 0:
        return CoarseGraining(d, (d,), label=f"padded(mu={mu})")
    lengths = [mu] * count
    lengths[-1] += d % mu
    return CoarseGraining(d, tuple(lengths), label=f"padded(mu={mu})")


def refine(cg: CoarseGraining, factor: int) -> CoarseGraining:
    """Split every block into ``factor`` equal contiguous sub-blocks."""
    if factor < 1 or any(v % factor for v in cg.lengths):
        raise IndivisibleBlock(f"factor {factor} does not divide every block of {cg.lengths}")
    lengths = tuple(v // factor for v in cg.lengths for _ in range(factor))
    return CoarseGraining(cg.dim, lengths, label=f"{cg.label}/{factor}" if cg.label else "")


def is_finer(fine: CoarseGraining, coarse: CoarseGraining) -> bool:
    """True when every block of ``coarse`` is a union of blocks of ``fine``."""
    if fine.dim != coarse.dim:
        return False
    return set(coarse.starts.tolist()) <= set(fine.starts.tolist())


def _check_dim(n: int, cg: CoarseGraining) -> None:
    if n != cg.dim:
        raise DimensionMismatch(f"state has dimension {n}, coarse-graining {cg.dim}")


def _from_probabilities(p: np.ndarray, cg: CoarseGraining) -> OEResult:
    shannon = float(entr(p).sum())
    boltzmann = float(np.dot(p, np.log(cg.volumes)))
    return OEResult(shannon + boltzmann, shannon, boltzmann, p)


def block_probabilities(state: np.ndarray, cg: CoarseGraining) -> np.ndarray:
    """p_i for a state vector (1-D) or density matrix (2-D)."""
    state = np.asarray(state)
    _check_dim(state.shape[0], cg)
    if state.ndim == 1:
        weights = np.abs(state) ** 2
    else:
        weights = np.clip(np.real(np.diagonal(state)), 0.0, None)
    return np.add.reduceat(weights, cg.starts)


def observational_entropy(psi: np.ndarray, cg: CoarseGraining) -> OEResult:
    """S_chi(psi) = -sum_i p_i log(p_i / V_i) and its Shannon/Boltzmann split."""
    _check_dim(psi.shape[0], cg)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > settings.EVOLUTION_NORM_TOL:
        raise DomainError(f"state is not normalized (norm {norm:.12f})")
    return _from_probabilities(block_probabilities(psi, cg), cg)


def observational_entropy_mixed(rho: np.ndarray, cg: CoarseGraining) -> OEResult:
    _check_dim(rho.shape[0], cg)
    density_eigenvalues(rho)
    return _from_probabilities(block_probabilities(rho, cg), cg)


def retrodicted_state(state: np.ndarray, cg: CoarseGraining) -> np.ndarray:
    """rho_rec = sum_i (p_i / V_i) Pi_i, as a dense diagonal matrix."""
    p = block_probabilities(state, cg)
    return np.diag(np.repeat(p / cg.volumes, cg.lengths)).astype(np.complex128)


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """sum_i p_i log(p_i / q_i), with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DimensionMismatch(f"distributions have shapes {p.shape} and {q.shape}")
    if np.any((q <= 0) & (p > 0)):
        raise SupportMismatch("p is not absolutely continuous with respect to q")
    return float(rel_entr(p, q).sum())


def umegaki_relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """D(rho || sigma) = Tr[rho (log rho - log sigma)]."""
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"operators have shapes {rho.shape} and {sigma.shape}")
    rho_eigs = density_eigenvalues(rho)
    density_eigenvalues(sigma)
    sigma_eigs, sigma_vecs = scipy.linalg.eigh(sigma)
    # Weight of rho along each eigenvector of sigma.
    weights = np.real(np.einsum("ik,ij,jk->k", sigma_vecs.conj(), rho, sigma_vecs))
    null = sigma_eigs <= settings.EIGENVALUE_FLOOR
    if np.any(weights[null] > settings.DENSITY_TOL):
        raise SupportMismatch("support of rho is not contained in support of sigma")
    cross = float(np.dot(weights[~null], np.log(sigma_eigs[~null])))
    return float(-entr(rho_eigs).sum() - cross)


def prediction_retrodiction_check(
    state: np.ndarray, cg: CoarseGraining
) -> RetrodictionCheck:
    """Evaluate S_chi - S_vN, D_KL(P_p || P_r) and D(rho || rho_rec).

    P_p(i, k) = lambda_k <phi_k|Pi_i|phi_k> and P_r(i, k) = (p_i / V_i)
    <phi_k|Pi_i|phi_k> over the eigendecomposition rho = sum_k lambda_k
    |phi_k><phi_k|. The first two must agree and bound the third from above.
    """
    state = np.asarray(state, dtype=np.complex128)
    rho = np.outer(state, state.conj()) if state.ndim == 1 else state
    _check_dim(rho.shape[0], cg)

    lam, phis = scipy.linalg.eigh(rho)
    lam = np.where(lam < settings.EIGENVALUE_FLOOR, 0.0, lam)
    overlaps = np.add.reduceat(np.abs(phis) ** 2, cg.starts, axis=0)

    p = block_probabilities(rho, cg)
    predictive = overlaps * lam[None, :]
    predictive = np.where(predictive < settings.EIGENVALUE_FLOOR, 0.0, predictive)
    retrodictive = overlaps * (p / cg.volumes)[:, None]

    if state.ndim == 1:
        oe = observational_entropy(state, cg).total
    else:
        oe = observational_entropy_mixed(rho, cg).total
    lhs = oe - float(entr(lam).sum())
    kl = kl_divergence(predictive.ravel(), retrodictive.ravel())
    umegaki = umegaki_relative_entropy(rho, retrodicted_state(rho, cg))
    logger.debug(
        "Retrodiction check on %s: lhs=%.6g kl=%.6g umegaki=%.6g",
        cg.label or cg.lengths,
        lhs,
        kl,
        umegaki,
    )

    if abs(lhs - kl) > settings.RETRODICTION_TOL:
        raise NumericalError(
            f"S_chi - S_vN = {lhs:.12f} differs from D_KL = {kl:.12f}"
        )
    if lhs < umegaki - settings.RETRODICTION_TOL:
        raise NumericalError(
            f"S_chi - S_vN = {lhs:.12f} is below D(rho||rho_rec) = {umegaki:.12f}"
        )
    return RetrodictionCheck(lhs, kl, umegaki)
