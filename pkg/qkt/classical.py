"""Classical kicked-top map on the unit sphere (alpha = pi/2).

X' = Z cos(kX) + Y sin(kX)
Y' = -Z sin(kX) + Y cos(kX)
Z' = -X
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from qkt import settings
from qkt.errors import DomainError, NotOnSphere

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhasePoint:
    x: float
    y: float
    z: float

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "PhasePoint":
        return cls(
            math.sin(theta) * math.cos(phi),
            math.sin(theta) * math.sin(phi),
            math.cos(theta),
        )

    @property
    def norm(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)

    def angles(self) -> tuple[float, float]:
        """(theta, phi) with phi mapped to [0, 2pi)."""
        theta = math.acos(max(-1.0, min(1.0, self.z)))
        phi = math.atan2(self.y, self.x) % (2 * math.pi)
        return theta, phi

    def distance(self, other: "PhasePoint") -> float:
        return math.dist((self.x, self.y, self.z), (other.x, other.y, other.z))


def _map_arrays(x, y, z, kappa):
    c = np.cos(kappa * x)
    s = np.sin(kappa * x)
    return z * c + y * s, -z * s + y * c, -x


def classical_step(p: PhasePoint, kappa: float) -> PhasePoint:
    if abs(p.norm - 1.0) > settings.SPHERE_TOL:
        raise NotOnSphere(f"point {p} has norm {p.norm:.9f}")
    x, y, z = _map_arrays(p.x, p.y, p.z, kappa)
    out = PhasePoint(float(x), float(y), float(z))
    norm = out.norm
    if abs(norm - 1.0) > settings.SPHERE_RENORM_TOL:
        out = PhasePoint(out.x / norm, out.y / norm, out.z / norm)
    return out


def trajectory(p: PhasePoint, kappa: float, n: int) -> list[PhasePoint]:
    """The orbit p, F(p), ..., F^n(p)."""
    if n < 0:
        raise DomainError(f"number of steps must be >= 0, got {n}")
    points = [p]
    for _ in range(n):
        points.append(classical_step(points[-1], kappa))
    return points


def _wrap_phi(phi: np.ndarray) -> np.ndarray:
    wrapped = np.mod(phi, 2 * np.pi)
    return np.where(wrapped >= 2 * np.pi, 0.0, wrapped)


def sample_sphere(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Angles uniform on the sphere: phi uniform, cos(theta) uniform."""
    phi = rng.uniform(0.0, 2 * np.pi, size=n)
    theta = np.arccos(rng.uniform(-1.0, 1.0, size=n))
    return theta, phi


def phase_portrait(kappa: float, n_init: int, n_steps: int, seed: int) -> pd.DataFrame:
    """Orbits of ``n_init`` random initial points, ``n_steps`` kicks each.

    Returns a frame with columns traj_id, step, theta, phi; step 0 holds the
    initial points. All trajectories are advanced together as arrays.
    """
    if n_init < 1 or n_steps < 1:
        raise DomainError(
            f"n_init and n_steps must be >= 1, got {n_init}, {n_steps}"
        )
    logger.debug("Iterating %d orbits for %d kicks at kappa=%s", n_init, n_steps, kappa)
    rng = np.random.default_rng(seed)
    theta0, phi0 = sample_sphere(n_init, rng)
    x = np.sin(theta0) * np.cos(phi0)
    y = np.sin(theta0) * np.sin(phi0)
    z = np.cos(theta0)

    xs = np.empty((n_steps + 1, n_init))
    ys = np.empty_like(xs)
    zs = np.empty_like(xs)
    xs[0], ys[0], zs[0] = x, y, z
    for step in range(1, n_steps + 1):
        x, y, z = _map_arrays(x, y, z, kappa)
        norm = np.sqrt(x**2 + y**2 + z**2)
        drifted = np.abs(norm - 1.0) > settings.SPHERE_RENORM_TOL
        if drifted.any():
            x = np.where(drifted, x / norm, x)
            y = np.where(drifted, y / norm, y)
            z = np.where(drifted, z / norm, z)
        xs[step], ys[step], zs[step] = x, y, z

    steps, traj = np.meshgrid(np.arange(n_steps + 1), np.arange(n_init), indexing="ij")
    frame = pd.DataFrame(
        {
            "traj_id": traj.ravel(),
            "step": steps.ravel(),
            "theta": np.arccos(np.clip(zs, -1.0, 1.0)).ravel(),
            "phi": _wrap_phi(np.arctan2(ys, xs)).ravel(),
        }
    )
    return frame.sort_values(["traj_id", "step"], kind="stable").reset_index(drop=True)
