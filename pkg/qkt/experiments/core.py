"""Experiment runners: one named, configuration-driven reproduction each."""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import dask
import numpy as np
import pandas as pd
from tqdm.auto import tqdm

from qkt import settings, utils
from qkt.classical import PhasePoint, phase_portrait, trajectory
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
    revival_depth,
    saturation_mean,
)
from qkt.ensemble import Quantity, averaged_series, sample_states
from qkt.entropy import (
    CoarseGraining,
    half_half_partition,
    observational_entropy,
    padded_partition,
    uniform_partition,
)
from qkt.errors import DomainError, IndivisibleBlock
from qkt.experiments.config import RunConfig, build_partition
from qkt.kicked_top import (
    KickedTopParams,
    ehrenfest_time,
    evolve_state,
    expectation_trajectory,
    floquet_unitary,
    iter_states,
)
from qkt.spin import SpinSpace, coherent_state

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    """Tables, summary values and recorded choices of one experiment run.

    ``series_keys`` names, per table, the columns that identify one series
    (used to split the table into JSON series objects).
    """

    experiment: str
    tables: dict[str, pd.DataFrame]
    series_keys: dict[str, list[str]]
    summary: dict[str, Any]
    meta: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    runner: Callable[[RunConfig], RunResult]


def _params(space: SpinSpace, kappa: float, cfg: RunConfig) -> KickedTopParams:
    return KickedTopParams(space, kappa, cfg.alpha)


def _series_frame(series: TimeSeries, column: str, **keys) -> pd.DataFrame:
    frame = series.to_frame().rename(columns={"value": column})
    for position, (key, value) in enumerate(keys.items()):
        frame.insert(position, key, value)
    return frame


def small_spin_partition(d: int) -> CoarseGraining:
    """Half-half where it is defined (8 | d), otherwise blocks of 2 with the remainder merged."""
    try:
        return half_half_partition(d)
    except IndivisibleBlock:
        return padded_partition(d, 2)


def tail_start(space: SpinSpace, kappa: float) -> int:
    """First step of the long-time tail: a multiple of the Ehrenfest time, at least MIN_TAIL_START."""
    try:
        t_e = ehrenfest_time(space, kappa)
    except DomainError:
        return settings.MIN_TAIL_START
    return max(settings.MIN_TAIL_START, math.ceil(settings.TAIL_EHRENFEST_FACTOR * t_e))


@utils.timer
def run_phase_space(cfg: RunConfig) -> RunResult:
    frames = []
    for kappa in tqdm(cfg.kappas, desc="Phase portraits"):
        portrait = phase_portrait(kappa, cfg.n_init, cfg.n_steps, cfg.seed)
        portrait.insert(0, "kappa", kappa)
        frames.append(portrait)
    table = pd.concat(frames, ignore_index=True)
    summary = {
        "points_per_kappa": {str(k): cfg.n_init * (cfg.n_steps + 1) for k in cfg.kappas},
    }
    return RunResult(
        cfg.experiment,
        {"phase_portrait": table},
        {"phase_portrait": ["kappa"]},
        summary,
        {"kappas": list(cfg.kappas), "n_init": cfg.n_init, "n_steps": cfg.n_steps},
    )


@dask.delayed
def _oe_profile(psi: np.ndarray, U: np.ndarray | None, kicks: int, cgs: list[CoarseGraining]) -> np.ndarray:
    """(total, shannon, boltzmann) for each coarse-graining, after ``kicks`` kicks."""
    if U is not None:
        *_, psi = iter_states(U, psi, kicks)
    return np.array([observational_entropy(psi, cg)[:3] for cg in cgs])


def _doubling_increments(mus: list[int], oe: np.ndarray, d: int) -> dict[str, float]:
    """(OE(2 mu) - OE(mu)) / log 2 keyed by mu, for mu >= the cutoff.

    The doubling onto the single block mu = d is left out: OE there is log d
    for every state.
    """
    return {
        str(mus[i]): float((oe[i + 1] - oe[i]) / math.log(2))
        for i in range(len(mus) - 1)
        if mus[i] >= settings.LOG_MU_INCREMENT_MIN_MU
        and mus[i + 1] == 2 * mus[i]
        and mus[i + 1] < d
    }


def _increment_deviation(increments: dict[str, float]) -> float | None:
    """Largest |ratio - 1| over the doubling ratios."""
    return max((abs(r - 1.0) for r in increments.values()), default=None)


@utils.timer
def run_oe_vs_coarse_graining(cfg: RunConfig) -> RunResult:
    space = SpinSpace.from_dim(cfg.d)
    mus = sorted(cfg.mus)
    cgs = [uniform_partition(cfg.d, mu) for mu in mus]
    states = sample_states(space, cfg.ensemble())

    series: list[tuple[str, float, np.ndarray]] = []
    profiles = utils.compute_ordered([_oe_profile(psi, None, 0, cgs) for psi in states])
    series.append(("unevolved", math.nan, np.mean(profiles, axis=0)))
    for kappa in tqdm(cfg.kappas, desc="OE vs coarse-graining"):
        U = floquet_unitary(_params(space, kappa, cfg))
        tasks = [_oe_profile(psi, U, cfg.evolve_kicks, cgs) for psi in states]
        profiles = utils.compute_ordered(tasks)
        series.append((f"kappa={kappa:g}", kappa, np.mean(profiles, axis=0)))

    rows = []
    for label, kappa, means in series:
        for mu, (total, shannon, boltzmann) in zip(mus, means):
            rows.append(
                {
                    "series": label,
                    "kappa": kappa,
                    "mu": mu,
                    "log_mu": math.log(mu),
                    "oe_mean": total,
                    "shannon_mean": shannon,
                    "boltzmann_mean": boltzmann,
                }
            )
    table = pd.DataFrame(rows)

    oe_by_series = {label: means[:, 0] for label, _, means in series}
    unevolved = oe_by_series["unevolved"]
    increments = {
        label: _doubling_increments(mus, oe, cfg.d) for label, oe in oe_by_series.items()
    }
    summary: dict[str, Any] = {
        "d": cfg.d,
        "log_d": math.log(cfg.d),
        "oe_at_roughest": {label: float(oe[-1]) for label, oe in oe_by_series.items()},
        "roughest_mu": mus[-1],
        "log_mu_increments": increments,
        "log_mu_increment_deviation": {
            label: _increment_deviation(ratios) for label, ratios in increments.items()
        },
    }
    if 2 in mus:
        at_two = mus.index(2)
        summary["excess_over_unevolved_mu2"] = {
            label: float(oe[at_two] - unevolved[at_two])
            for label, oe in oe_by_series.items()
            if label != "unevolved"
        }
    return RunResult(
        cfg.experiment,
        {"oe_vs_mu": table},
        {"oe_vs_mu": ["series"]},
        summary,
        {
            "d": cfg.d,
            "kappas": list(cfg.kappas),
            "coarse_graining": "uniform",
            "evolve_kicks": cfg.evolve_kicks,
            "count": cfg.count,
            "sampling": cfg.sampling,
        },
    )


@utils.timer
def run_oe_dynamics(cfg: RunConfig) -> RunResult:
    space = SpinSpace.from_dim(cfg.d)
    cg = build_partition(cfg, cfg.d)
    spec = cfg.ensemble()
    max_oe = math.log(cfg.d)

    frames, fit_rows = [], []
    saturation, peak = {}, {}
    for kappa in tqdm(cfg.kappas, desc="OE dynamics"):
        series = averaged_series(_params(space, kappa, cfg), Quantity("oe", cg), spec, cfg.steps)
        frames.append(_series_frame(series, "oe", kappa=kappa))
        peak[str(kappa)] = float(series.values.max())
        start, stop = settings.SATURATION_WINDOW
        if cfg.steps >= start:
            saturation[str(kappa)] = saturation_mean(series, start, min(stop, cfg.steps))
        if kappa in cfg.fit_kappas:
            fit = fit_exponential_approach(series, max_oe, cfg.fit_window)
            fit_rows.append(
                {
                    "kappa": kappa,
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "residual": fit.residual,
                    "window_start": fit.window[0],
                    "window_stop": fit.window[1],
                }
            )

    fits = pd.DataFrame(
        fit_rows,
        columns=["kappa", "slope", "intercept", "residual", "window_start", "window_stop"],
    )
    summary = {
        "d": cfg.d,
        "max_oe": max_oe,
        "approach_slopes": {str(r["kappa"]): r["slope"] for r in fit_rows},
        "saturation_mean": saturation,
        "saturation_window": list(settings.SATURATION_WINDOW),
        "series_max": peak,
    }
    return RunResult(
        cfg.experiment,
        {"oe_series": pd.concat(frames, ignore_index=True), "approach_fits": fits},
        {"oe_series": ["kappa"], "approach_fits": []},
        summary,
        {
            "d": cfg.d,
            "kappas": list(cfg.kappas),
            "coarse_graining": cg.label,
            "fit_window": list(cfg.fit_window),
            "count": cfg.count,
            "sampling": cfg.sampling,
        },
    )


@utils.timer
def run_growth_rates(cfg: RunConfig) -> RunResult:
    spec = cfg.ensemble()
    rows, fit_rows = [], []
    for d in cfg.dims:
        space = SpinSpace.from_dim(d)
        cg = build_partition(cfg, d)
        for kappa in tqdm(cfg.kappas, desc=f"Growth rates (d={d})"):
            params = _params(space, kappa, cfg)
            U = floquet_unitary(params)
            oe = averaged_series(params, Quantity("oe", cg), spec, cfg.steps, U=U)
            otoc = averaged_series(params, Quantity("otoc"), spec, cfg.steps, U=U)
            rows.append(
                {"d": d, "kappa": kappa, "lambda_oe": lambda_oe(oe), "lambda_q": lambda_q(otoc)}
            )
        subset = [r for r in rows if r["d"] == d]
        for quantity in ("lambda_oe", "lambda_q"):
            if len(subset) < 2:
                continue
            fit = linear_fit([r["kappa"] for r in subset], [r[quantity] for r in subset])
            fit_rows.append(
                {
                    "d": d,
                    "quantity": quantity,
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "residual": fit.residual,
                }
            )

    slopes: dict[str, dict[str, float]] = {}
    for r in fit_rows:
        slopes.setdefault(str(r["d"]), {})[r["quantity"]] = r["slope"]
    rates: dict[str, dict[str, dict[str, float]]] = {}
    for r in rows:
        for quantity in ("lambda_oe", "lambda_q"):
            by_kappa = rates.setdefault(str(r["d"]), {}).setdefault(quantity, {})
            by_kappa[str(r["kappa"])] = r[quantity]
    return RunResult(
        cfg.experiment,
        {
            "rates": pd.DataFrame(rows),
            "rate_fits": pd.DataFrame(
                fit_rows, columns=["d", "quantity", "slope", "intercept", "residual"]
            ),
        },
        {"rates": ["d"], "rate_fits": []},
        {"slopes": slopes, "rates": rates, "rate_step": settings.GROWTH_RATE_STEP},
        {
            "dims": list(cfg.dims),
            "kappas": list(cfg.kappas),
            "coarse_graining": cfg.coarse_graining,
            "count": cfg.count,
            "sampling": cfg.sampling,
        },
    )


@utils.timer
def run_small_spin(cfg: RunConfig) -> RunResult:
    kappa = cfg.kappas[0]
    spec = cfg.ensemble()
    otoc_frames, oe_frames = [], []
    per_j: dict[str, dict[str, Any]] = {}
    partitions = {}
    for j in tqdm(cfg.js, desc="Small spins"):
        space = SpinSpace.from_j(j)
        params = _params(space, kappa, cfg)
        U = floquet_unitary(params)
        cg = small_spin_partition(space.dim)
        partitions[str(j)] = cg.label

        otoc = averaged_series(params, Quantity("otoc"), spec, cfg.steps, U=U)
        oe = averaged_series(params, Quantity("oe", cg), spec, cfg.steps, U=U)
        otoc_frames.append(_series_frame(otoc, "otoc", j=j, d=space.dim))
        oe_frames.append(_series_frame(oe, "oe", j=j, d=space.dim, coarse_graining=cg.label))

        tail = fluctuation_stats(oe, settings.SMALL_SPIN_TAIL_START)
        slope = float((otoc.values[2] - otoc.values[0]) / 2)
        per_j[str(j)] = {
            "d": space.dim,
            "otoc_initial_slope": slope,
            # C(t) scales with the Casimir j(j+1).
            "otoc_initial_slope_per_casimir": slope / (space.j * (space.j + 1)),
            "otoc_revival_depth": revival_depth(otoc, settings.SMALL_SPIN_TAIL_START),
            "oe_fraction_by_reach_step": fraction_of_max_by(oe, settings.SMALL_SPIN_REACH_STEP),
            "oe_tail_mean": tail.mean,
            "oe_tail_relative_excursion": tail.max_excursion / tail.mean if tail.mean > 0 else None,
        }

    return RunResult(
        cfg.experiment,
        {
            "otoc_series": pd.concat(otoc_frames, ignore_index=True),
            "oe_series": pd.concat(oe_frames, ignore_index=True),
        },
        {"otoc_series": ["j"], "oe_series": ["j"]},
        {"kappa": kappa, "per_j": per_j},
        {
            "js": list(cfg.js),
            "kappa": kappa,
            "coarse_graining": partitions,
            "count": cfg.count,
            "sampling": cfg.sampling,
        },
    )


@utils.timer
def run_saddle_vs_chaos(cfg: RunConfig) -> RunResult:
    kappa = cfg.kappas[0]
    space = SpinSpace.from_dim(cfg.d)
    U = floquet_unitary(_params(space, kappa, cfg))
    cg = build_partition(cfg, cfg.d)
    start = tail_start(space, kappa)
    if start >= cfg.steps:
        start = settings.MIN_TAIL_START
        logger.warning("Tail start beyond %d steps; using %d", cfg.steps, start)

    fotoc_frames, oe_frames, stat_rows = [], [], []
    for label, (theta, phi) in tqdm(
        list(zip(cfg.point_labels, cfg.points)), desc="Saddle vs chaos"
    ):
        psi = coherent_state(space, theta, phi)
        keys = {"point": label, "theta": theta, "phi": phi}
        for name, series, frames in (
            ("fotoc", fotoc(psi, cfg.delta, U, cfg.steps), fotoc_frames),
            ("oe", oe_series(psi, cg, U, cfg.steps), oe_frames),
        ):
            frames.append(_series_frame(series, name, **keys))
            stats = fluctuation_stats(series, start)
            stat_rows.append({"point": label, "quantity": name, **stats._asdict()})

    stats = pd.DataFrame(stat_rows, columns=["point", "quantity", "mean", "std", "max_excursion"])
    tail_std = {
        quantity: dict(zip(group["point"], group["std"]))
        for quantity, group in stats.groupby("quantity", sort=True)
    }
    return RunResult(
        cfg.experiment,
        {
            "fotoc_series": pd.concat(fotoc_frames, ignore_index=True),
            "oe_series": pd.concat(oe_frames, ignore_index=True),
            "fluctuations": stats,
        },
        {"fotoc_series": ["point"], "oe_series": ["point"], "fluctuations": []},
        {"kappa": kappa, "tail_start": start, "tail_std": tail_std},
        {
            "d": cfg.d,
            "kappa": kappa,
            "coarse_graining": cg.label,
            "delta": cfg.delta,
            "tail_start": start,
        },
    )


@utils.timer
def run_quantum_classical(cfg: RunConfig) -> RunResult:
    if abs(cfg.alpha - settings.DEFAULT_ALPHA) > 1e-12:
        logger.warning("The classical map assumes alpha = pi/2, got %s", cfg.alpha)
    space = SpinSpace.from_dim(cfg.d)
    rows = []
    ehrenfest, departure = {}, {}
    for kappa in tqdm(cfg.kappas, desc="Quantum vs classical"):
        U = floquet_unitary(_params(space, kappa, cfg))
        try:
            ehrenfest[str(kappa)] = ehrenfest_time(space, kappa)
        except DomainError:
            ehrenfest[str(kappa)] = None
        for label, (theta, phi) in zip(cfg.point_labels, cfg.points):
            quantum = expectation_trajectory(
                evolve_state(U, coherent_state(space, theta, phi), cfg.steps), space
            )
            orbit = trajectory(PhasePoint.from_angles(theta, phi), kappa, cfg.steps)
            classical = np.array([(p.x, p.y, p.z) for p in orbit])
            distance = np.linalg.norm(quantum - classical, axis=1)
            departed = np.flatnonzero(distance > settings.CORRESPONDENCE_TOL)
            departure[f"{kappa}/{label}"] = int(departed[0]) if departed.size else None
            rows.append(
                pd.DataFrame(
                    {
                        "kappa": kappa,
                        "point": label,
                        "step": np.arange(cfg.steps + 1),
                        "x_quantum": quantum[:, 0],
                        "y_quantum": quantum[:, 1],
                        "z_quantum": quantum[:, 2],
                        "x_classical": classical[:, 0],
                        "y_classical": classical[:, 1],
                        "z_classical": classical[:, 2],
                        "distance": distance,
                    }
                )
            )
    return RunResult(
        cfg.experiment,
        {"trajectories": pd.concat(rows, ignore_index=True)},
        {"trajectories": ["kappa", "point"]},
        {"ehrenfest_time": ehrenfest, "departure_step": departure, "correspondence_tol": settings.CORRESPONDENCE_TOL},
        {"d": cfg.d, "kappas": list(cfg.kappas), "points": dict(zip(cfg.point_labels, cfg.points))},
    )


EXPERIMENTS: dict[str, Experiment] = {
    e.name: e
    for e in (
        Experiment("phase-space", "Classical kicked-top phase portraits", run_phase_space),
        Experiment(
            "oe-vs-coarse-graining",
            "Mean OE against uniform coarse-graining length, unevolved and after kicks",
            run_oe_vs_coarse_graining,
        ),
        Experiment(
            "oe-dynamics",
            "Ensemble OE against kicks and its exponential approach to log d",
            run_oe_dynamics,
        ),
        Experiment(
            "growth-rates",
            "Initial OE and OTOC growth rates against kick strength",
            run_growth_rates,
        ),
        Experiment("small-spin", "OTOC and OE for small spins in the chaotic regime", run_small_spin),
        Experiment(
            "saddle-vs-chaos",
            "Long-time FOTOC and OE from a saddle point and a chaotic point",
            run_saddle_vs_chaos,
        ),
        Experiment(
            "quantum-classical",
            "<J/j> of a coherent state against the classical orbit",
            run_quantum_classical,
        ),
    )
}


def run_experiment(cfg: RunConfig) -> RunResult:
    experiment = EXPERIMENTS[cfg.experiment]
    logger.info("Running %s (config %s)", experiment.name, cfg.hash())
    return experiment.runner(cfg)
