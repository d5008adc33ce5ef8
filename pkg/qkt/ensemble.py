"""Coherent-state ensembles and ensemble-averaged diagnostic series.

Every member draws its angles from its own counter-based Philox stream keyed
by (seed, member index), and members are reduced in index order, so results
do not depend on ensemble scheduling or worker count.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import dask
import numpy as np

from qkt import settings, utils
from qkt.diagnostics import TimeSeries, fotoc_values, oe_values, otoc_ensemble
from qkt.entropy import CoarseGraining
from qkt.errors import DimensionMismatch, DomainError
from qkt.kicked_top import KickedTopParams, floquet_unitary
from qkt.spin import Axis, SpinSpace, build_component, coherent_state, rotation

logger = logging.getLogger(__name__)

SAMPLINGS = ("uniform-theta-phi", "uniform-sphere")


@dataclass(frozen=True)
class EnsembleSpec:
    count: int = settings.ENSEMBLE_COUNT
    seed: int = settings.ENSEMBLE_SEED
    sampling: str = "uniform-theta-phi"
    theta_range: tuple[float, float] = (0.0, math.pi)
    phi_range: tuple[float, float] = (0.0, 2 * math.pi)

    def __post_init__(self):
        if self.count < 1:
            raise DomainError(f"ensemble count must be >= 1, got {self.count}")
        if self.sampling not in SAMPLINGS:
            raise DomainError(
                f"sampling must be one of {SAMPLINGS}, got {self.sampling!r}"
            )
        t_lo, t_hi = self.theta_range
        p_lo, p_hi = self.phi_range
        if not 0.0 <= t_lo <= t_hi <= math.pi:
            raise DomainError(f"theta range {self.theta_range} outside [0, pi]")
        if not 0.0 <= p_lo <= p_hi <= 2 * math.pi:
            raise DomainError(f"phi range {self.phi_range} outside [0, 2pi]")


@dataclass(frozen=True)
class Quantity:
    """What to average: OE under a coarse-graining, OTOC of J_axis, or FOTOC."""

    kind: Literal["oe", "otoc", "fotoc"]
    coarse_graining: CoarseGraining | None = None
    operator: Axis = "z"
    delta: float = settings.FOTOC_DELTA
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.kind not in ("oe", "otoc", "fotoc"):
            raise DomainError(f"unknown quantity {self.kind!r}")
        if self.kind == "oe" and self.coarse_graining is None:
            raise DomainError("OE needs a coarse-graining")


def member_rng(seed: int, member: int) -> np.random.Generator:
    """Independent Philox stream for one ensemble member."""
    seq = np.random.SeedSequence(seed, spawn_key=(member,))
    return np.random.Generator(np.random.Philox(seq))


def sample_angles(spec: EnsembleSpec) -> tuple[np.ndarray, np.ndarray]:
    thetas = np.empty(spec.count)
    phis = np.empty(spec.count)
    t_lo, t_hi = spec.theta_range
    p_lo, p_hi = spec.phi_range
    for member in range(spec.count):
        rng = member_rng(spec.seed, member)
        if spec.sampling == "uniform-theta-phi":
            thetas[member] = rng.uniform(t_lo, t_hi)
        else:
            thetas[member] = np.arccos(rng.uniform(math.cos(t_hi), math.cos(t_lo)))
        phis[member] = rng.uniform(p_lo, p_hi)
    # Keep phi inside [0, 2pi) when the upper bound is drawn exactly.
    phis = np.where(phis >= 2 * math.pi, 0.0, phis)
    return np.clip(thetas, 0.0, math.pi), phis


def sample_states(space: SpinSpace, spec: EnsembleSpec) -> list[np.ndarray]:
    thetas, phis = sample_angles(spec)
    return [coherent_state(space, float(t), float(p)) for t, p in zip(thetas, phis)]


@dask.delayed
def _member_oe(psi, cg, U, n):
    return oe_values(psi, cg, U, n)


@dask.delayed
def _member_fotoc(psi, W, U, n):
    return fotoc_values(psi, W, U, n)


def ensemble_values(
    params: KickedTopParams,
    quantity: Quantity,
    spec: EnsembleSpec,
    n: int,
    U: np.ndarray | None = None,
) -> np.ndarray:
    """Per-member series, shape (count, n+1), rows in member order."""
    space = params.space
    if quantity.coarse_graining is not None and quantity.coarse_graining.dim != space.dim:
        raise DimensionMismatch(
            f"coarse-graining dimension {quantity.coarse_graining.dim} "
            f"does not match {space}"
        )
    U = floquet_unitary(params) if U is None else U
    states = sample_states(space, spec)
    logger.debug(
        "Ensemble of %d states for %s, kappa=%s, quantity=%s",
        spec.count,
        space,
        params.kappa,
        quantity.kind,
    )

    if quantity.kind == "otoc":
        # One Heisenberg evolution serves the whole ensemble.
        A = build_component(space, quantity.operator)
        return otoc_ensemble(states, A, U, n)

    if quantity.kind == "oe":
        tasks = [_member_oe(psi, quantity.coarse_graining, U, n) for psi in states]
    else:
        W = rotation(space, "x", quantity.delta)
        tasks = [_member_fotoc(psi, W, U, n) for psi in states]
    return np.vstack(utils.compute_ordered(tasks))


def averaged_series(
    params: KickedTopParams,
    quantity: Quantity,
    spec: EnsembleSpec,
    n: int,
    U: np.ndarray | None = None,
) -> TimeSeries:
    """Pointwise mean over the ensemble of the per-state series."""
    members = ensemble_values(params, quantity, spec, n, U)
    meta = {
        "quantity": quantity.kind,
        "j": params.space.j,
        "d": params.space.dim,
        "kappa": params.kappa,
        "alpha": params.alpha,
        "count": spec.count,
        "seed": spec.seed,
        "sampling": spec.sampling,
        **quantity.meta,
    }
    if quantity.coarse_graining is not None:
        meta["coarse_graining"] = quantity.coarse_graining.label
    if quantity.kind == "fotoc":
        meta["delta"] = quantity.delta
    return TimeSeries.from_values(members.mean(axis=0), **meta)
