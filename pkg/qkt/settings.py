# Numerical settings and defaults for the qkt package.
#
# Units: hbar = 1 and the kick period tau = 1. All entropies are in nats.

import logging
import math
import os

from qkt import __version__

logger = logging.getLogger(__name__)

# Code version recorded in output metadata. Strip any local version segment
# (e.g. "+g<hash>" from setuptools_scm) so reruns from a dirty tree still
# produce identical files.
_raw_version = os.environ.get("QKT_OE_VERSION", __version__)
if _raw_version == "unknown":
    logger.warning("Package version is 'unknown'. Falling back to '0.0.0'.")
    _raw_version = "0.0.0"
VERSION = _raw_version.split("+", 1)[0]

# Environment variable capping the number of dask worker threads.
THREADS_ENV_VAR = "QKT_OE_THREADS"

# --- Tolerances ---

# Unitarity of rotations and Floquet matrices (max-norm of R R^dagger - I).
UNITARITY_TOL = 1e-10

# Unit norm of states after construction.
NORM_TOL = 1e-10

# Unit norm of states re-checked after every evolution step.
EVOLUTION_NORM_TOL = 1e-8

# Hermiticity of A(t) during Heisenberg evolution.
HERMITICITY_TOL = 1e-8

# Density-matrix checks: Hermitian, PSD and unit trace.
DENSITY_TOL = 1e-10

# Retrodiction identity S_chi - S_vN = D_KL(P_p || P_r).
RETRODICTION_TOL = 1e-8

# Eigenvalues below this are treated as exact zeros in relative entropies.
EIGENVALUE_FLOOR = 1e-12

# Coherent states closer than this to theta = pi use the |j,-j> limit.
COHERENT_POLE_TOL = 1e-9

# Classical phase points must lie this close to the unit sphere.
SPHERE_TOL = 1e-6

# Classical steps are renormalized only when the drift exceeds this.
SPHERE_RENORM_TOL = 1e-12

# --- Model defaults ---

# Rotation angle of the Floquet operator.
DEFAULT_ALPHA = math.pi / 2

# Strength of the x-rotation perturbation in FOTOC.
FOTOC_DELTA = 0.01

# Default ensemble size and seed.
ENSEMBLE_COUNT = 100
ENSEMBLE_SEED = 20230101

# Default number of kicks for short dynamics and long-time studies.
DYNAMICS_STEPS = 50
LONG_TIME_STEPS = 200

# Kicks applied before measuring "evolved" OE against coarse-graining length:
# about two Ehrenfest times at kappa=7, d=1024.
EVOLVED_KICKS = 10

# Fit window (inclusive steps) of the exponential approach to saturation.
APPROACH_FIT_WINDOW = (0, 5)

# Step index at which the initial growth rates are evaluated.
GROWTH_RATE_STEP = 3

# Long-time tails start at this multiple of the Ehrenfest time, but never
# before MIN_TAIL_START.
TAIL_EHRENFEST_FACTOR = 4
MIN_TAIL_START = 20

# Phase portrait defaults.
PORTRAIT_INIT = 200
PORTRAIT_STEPS = 500

# --- Reference values for validation ---
# Values reported for the kicked top with d = 400 (and 1000 where keyed by d).

# Slopes of log(OE_max - OE) over steps 0-5 per kick strength.
REFERENCE_APPROACH_SLOPES = {7.0: -0.445, 4.5: -0.395, 4.0: -0.326}
APPROACH_SLOPE_TOL = 0.05

# Slopes of lambda_OE and lambda_q against kappa per dimension.
REFERENCE_LAMBDA_OE_SLOPES = {400: 0.08560, 1000: 0.09182}
REFERENCE_LAMBDA_Q_SLOPES = {400: 0.25176, 1000: 0.24361}
LAMBDA_OE_SLOPE_TOL = 0.02
LAMBDA_Q_SLOPE_TOL = 0.05

# Saturated OE at kappa = 7, d = 400, averaged over steps 20-50.
SATURATION_WINDOW = (20, 50)
SATURATION_LOWER = 5.8

# Small-j criteria.
SMALL_SPIN_REACH_FRACTION = 0.9
SMALL_SPIN_REACH_STEP = 2
SMALL_SPIN_TAIL_BAND = 0.25
SMALL_SPIN_TAIL_START = 5
REVIVAL_FRACTION = 0.5

# OE against coarse-graining length.
LOG_MU_INCREMENT_TOL = 0.10
LOG_MU_INCREMENT_MIN_MU = 64
CHAOTIC_EXCESS_NATS = 1.0

# Distance on the unit sphere at which <J/j> is taken to have left the
# classical orbit.
CORRESPONDENCE_TOL = 0.1

# Initial OTOC slope per j(j+1) at j=5/2 relative to j=9/2, where the
# growth rate has saturated.
SMALL_SPIN_SLOPE_TOL = 0.10

# Both growth rates must increase with kappa over this range.
MONOTONE_KAPPA_RANGE = (4.0, 6.5)
