"""Run configuration: registry defaults, TOML files and --set overrides."""

import dataclasses
import logging
import math
import pathlib
import tomllib
from dataclasses import dataclass
from typing import Any, Iterable

from qkt import settings, utils
from qkt.entropy import (
    CoarseGraining,
    half_half_partition,
    mixed_partition,
    padded_partition,
    uniform_partition,
)
from qkt.ensemble import EnsembleSpec
from qkt.errors import ConfigError, NumericalError

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json")
COARSE_GRAININGS = ("half-half", "mixed", "uniform", "padded")

_HALF_PI = math.pi / 2
_QUARTER_PI = math.pi / 4


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    d: int | None = None
    dims: tuple[int, ...] = ()
    js: tuple[float, ...] = ()
    kappas: tuple[float, ...] = ()
    alpha: float = settings.DEFAULT_ALPHA
    steps: int = settings.DYNAMICS_STEPS
    count: int = settings.ENSEMBLE_COUNT
    seed: int = settings.ENSEMBLE_SEED
    sampling: str = "uniform-theta-phi"
    coarse_graining: str = "half-half"
    mu: int = 2
    mu_low: int = 2
    mu_high: int = 4
    low_first: bool = True
    mus: tuple[int, ...] = ()
    evolve_kicks: int = settings.EVOLVED_KICKS
    fit_window: tuple[int, int] = settings.APPROACH_FIT_WINDOW
    fit_kappas: tuple[float, ...] = ()
    delta: float = settings.FOTOC_DELTA
    points: tuple[tuple[float, float], ...] = ()
    point_labels: tuple[str, ...] = ()
    n_init: int = settings.PORTRAIT_INIT
    n_steps: int = settings.PORTRAIT_STEPS
    format: str = "csv"
    out: str | None = None

    def ensemble(self) -> EnsembleSpec:
        return EnsembleSpec(count=self.count, seed=self.seed, sampling=self.sampling)

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def hash(self) -> str:
        """Hash of everything that affects the numbers (not the output location)."""
        payload = self.as_dict()
        payload.pop("out")
        return utils.config_hash(payload)


DEFAULTS: dict[str, dict[str, Any]] = {
    "phase-space": {
        "kappas": (0.5, 2.5, 7.0),
    },
    "oe-vs-coarse-graining": {
        "d": 1024,
        "kappas": (0.5, 2.5, 7.0),
        "coarse_graining": "uniform",
        "mus": tuple(2**k for k in range(11)),
    },
    "oe-dynamics": {
        "d": 400,
        "kappas": (0.5, 2.5, 4.0, 4.5, 7.0),
        "fit_kappas": (4.0, 4.5, 7.0),
    },
    "growth-rates": {
        "dims": (400, 1000),
        "kappas": tuple(3.5 + 0.25 * k for k in range(13)),
        "steps": 5,
    },
    "small-spin": {
        "js": (0.5, 1.5, 2.5, 3.5, 4.5),
        "kappas": (3 * math.pi / 2,),
        "steps": 30,
    },
    "saddle-vs-chaos": {
        "d": 400,
        "kappas": (2.5,),
        "steps": settings.LONG_TIME_STEPS,
        "points": ((_HALF_PI, _HALF_PI), (_QUARTER_PI, _QUARTER_PI)),
        "point_labels": ("saddle", "chaotic"),
    },
    "quantum-classical": {
        "d": 400,
        "kappas": (0.5, 2.5, 7.0),
        "steps": 20,
        "points": ((1.0, 0.5), (_HALF_PI, _HALF_PI)),
        "point_labels": ("generic", "saddle"),
    },
}

_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _ints(value) -> tuple[int, ...]:
    return tuple(int(v) for v in value)


def _floats(value) -> tuple[float, ...]:
    return tuple(float(v) for v in value)


def _pairs(value) -> tuple[tuple[float, float], ...]:
    pairs = tuple(tuple(float(x) for x in pair) for pair in value)
    if any(len(p) != 2 for p in pairs):
        raise ValueError("points must be [theta, phi] pairs")
    return pairs


def _window(value) -> tuple[int, int]:
    window = _ints(value)
    if len(window) != 2:
        raise ValueError("fit_window must be [start, stop]")
    return window


def _bool(value) -> bool:
    if isinstance(value, str):
        if value.lower() not in ("true", "false"):
            raise ValueError(f"not a boolean: {value!r}")
        return value.lower() == "true"
    return bool(value)


_COERCE = {
    "d": int,
    "dims": _ints,
    "js": _floats,
    "kappas": _floats,
    "alpha": float,
    "steps": int,
    "count": int,
    "seed": int,
    "mu": int,
    "mu_low": int,
    "mu_high": int,
    "low_first": _bool,
    "mus": _ints,
    "evolve_kicks": int,
    "fit_window": _window,
    "fit_kappas": _floats,
    "delta": float,
    "points": _pairs,
    "point_labels": lambda v: tuple(str(x) for x in v),
    "n_init": int,
    "n_steps": int,
    "sampling": str,
    "coarse_graining": str,
    "format": str,
    "out": str,
}


def parse_override(item: str) -> tuple[str, Any]:
    """Parse ``key=value``; the value is read as a TOML literal if possible."""
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override must look like key=value, got {item!r}")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def _coerce(values: dict[str, Any]) -> dict[str, Any]:
    out = {}
    for key, value in values.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown configuration key {key!r}")
        convert = _COERCE.get(key)
        if convert is None or value is None:
            out[key] = value
            continue
        try:
            out[key] = convert(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for {key!r}: {value!r} ({exc})") from exc
    return out


def build_partition(cfg: RunConfig, d: int) -> CoarseGraining:
    """Coarse-graining named by the config for a space of dimension d."""
    if cfg.coarse_graining == "half-half":
        return half_half_partition(d, cfg.low_first)
    if cfg.coarse_graining == "mixed":
        return mixed_partition(d, cfg.mu_low, cfg.mu_high, cfg.low_first)
    if cfg.coarse_graining == "uniform":
        return uniform_partition(d, cfg.mu)
    if cfg.coarse_graining == "padded":
        return padded_partition(d, cfg.mu)
    raise ConfigError(f"unknown coarse-graining {cfg.coarse_graining!r}")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def check_config(cfg: RunConfig) -> None:
    """Raise ConfigError when the resolved configuration cannot be run."""
    _require(cfg.experiment in DEFAULTS, f"unknown experiment {cfg.experiment!r}")
    _require(cfg.format in FORMATS, f"format must be one of {FORMATS}")
    _require(cfg.coarse_graining in COARSE_GRAININGS, f"coarse_graining must be one of {COARSE_GRAININGS}")
    _require(cfg.steps >= 1, "steps must be >= 1")
    _require(len(cfg.kappas) > 0, "kappas must not be empty")
    _require(
        all(math.isfinite(k) and k >= 0 for k in cfg.kappas),
        "kappas must be finite and >= 0",
    )
    _require(math.isfinite(cfg.alpha), "alpha must be finite")
    _require(math.isfinite(cfg.delta) and cfg.delta >= 0, "delta must be finite and >= 0")
    _require(cfg.evolve_kicks >= 0, "evolve_kicks must be >= 0")
    _require(cfg.n_init >= 1 and cfg.n_steps >= 1, "n_init and n_steps must be >= 1")
    _require(len(cfg.points) == len(cfg.point_labels), "points and point_labels differ in length")
    for theta, phi in cfg.points:
        _require(
            0 <= theta <= math.pi and 0 <= phi < 2 * math.pi,
            f"point ({theta}, {phi}) outside [0, pi] x [0, 2pi)",
        )
    try:
        cfg.ensemble()
    except NumericalError as exc:
        raise ConfigError(str(exc)) from exc

    dims = list(cfg.dims)
    if cfg.d is not None:
        dims.append(cfg.d)
    _require(all(d >= 2 for d in dims), "dimensions must be >= 2")
    for j in cfg.js:
        _require(j > 0 and abs(2 * j - round(2 * j)) < 1e-9, f"j={j} is not a positive half-integer")

    if cfg.experiment == "oe-vs-coarse-graining":
        _require(cfg.d is not None and len(cfg.mus) > 0, "needs d and mus")
        for mu in cfg.mus:
            _require(1 <= mu <= cfg.d and cfg.d % mu == 0, f"mu={mu} does not divide d={cfg.d}")
    elif cfg.experiment in ("oe-dynamics", "saddle-vs-chaos", "growth-rates"):
        _require(len(dims) > 0, f"{cfg.experiment} needs d or dims")
        for d in dims:
            try:
                build_partition(cfg, d)
            except NumericalError as exc:
                raise ConfigError(str(exc)) from exc

    if cfg.experiment == "oe-dynamics":
        start, stop = cfg.fit_window
        _require(0 <= start < stop <= cfg.steps, f"fit_window {cfg.fit_window} outside 0..{cfg.steps}")
    if cfg.experiment == "growth-rates":
        _require(cfg.steps >= settings.GROWTH_RATE_STEP, f"growth-rates needs steps >= {settings.GROWTH_RATE_STEP}")
    if cfg.experiment == "small-spin":
        _require(len(cfg.js) > 0, "small-spin needs js")
        _require(cfg.steps > settings.SMALL_SPIN_TAIL_START, f"small-spin needs steps > {settings.SMALL_SPIN_TAIL_START}")
    if cfg.experiment == "saddle-vs-chaos":
        _require(len(cfg.points) >= 1, "saddle-vs-chaos needs points")
        _require(cfg.steps > settings.MIN_TAIL_START, f"saddle-vs-chaos needs steps > {settings.MIN_TAIL_START}")
    if cfg.experiment == "quantum-classical":
        _require(cfg.d is not None and len(cfg.points) >= 1, "quantum-classical needs d and points")


def resolve_config(
    experiment: str,
    config_path: pathlib.Path | None = None,
    overrides: Iterable[str] = (),
) -> RunConfig:
    """Registry defaults, then the TOML file, then ``key=value`` overrides."""
    if experiment not in DEFAULTS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; choose from {', '.join(DEFAULTS)}"
        )
    values: dict[str, Any] = {"experiment": experiment, **DEFAULTS[experiment]}

    if config_path is not None:
        try:
            with open(config_path, "rb") as f:
                from_file = tomllib.load(f)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        named = from_file.pop("experiment", experiment)
        if named != experiment:
            raise ConfigError(
                f"config {config_path} is for {named!r}, not {experiment!r}"
            )
        logger.info("Loaded %d settings from %s", len(from_file), config_path)
        values.update(from_file)

    for item in overrides:
        key, value = parse_override(item)
        if key == "experiment":
            raise ConfigError("the experiment cannot be overridden")
        values[key] = value

    cfg = RunConfig(**_coerce(values))
    check_config(cfg)
    return cfg
