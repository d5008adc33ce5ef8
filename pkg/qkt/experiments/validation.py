"""Checks of a run summary against reference values for the kicked top."""

import logging
import math
import pathlib
from dataclasses import dataclass
from typing import Any

import jinja2

from qkt import settings

logger = logging.getLogger(__name__)

REPORT_FILE = "validation_report.md"


@dataclass(frozen=True)
class Check:
    name: str
    value: Any
    expected: str
    passed: bool


def _within(value: float | None, target: float, tol: float) -> bool:
    return value is not None and abs(value - target) <= tol


class ResultValidator:
    """Validator for the summary.json of one experiment run."""

    def __init__(self, document: dict[str, Any]):
        """
        Args:
            document: Parsed summary.json with ``meta``, ``config`` and ``summary``.
        """
        self.meta = document.get("meta", {})
        self.config = document.get("config", {})
        self.summary = document.get("summary", {})
        self.experiment = self.meta.get("experiment", self.config.get("experiment"))
        self.checks: list[Check] = []
        self.notes: list[str] = []

    def _add(self, name: str, value: Any, expected: str, passed: bool) -> None:
        self.checks.append(Check(name, value, expected, bool(passed)))

    def check_oe_dynamics(self) -> None:
        d = self.summary.get("d")
        if d != 400:
            self.notes.append(f"Reference values are for d=400; this run has d={d}.")
            return
        max_oe = self.summary["max_oe"]
        saturation = self.summary.get("saturation_mean", {})
        if "7.0" in saturation:
            value = saturation["7.0"]
            self._add(
                "OE saturation at kappa=7, steps 20-50",
                value,
                f"[{settings.SATURATION_LOWER}, {max_oe:.4f}]",
                settings.SATURATION_LOWER <= value <= max_oe,
            )
        slopes = self.summary.get("approach_slopes", {})
        for kappa, reference in settings.REFERENCE_APPROACH_SLOPES.items():
            if str(kappa) not in slopes:
                continue
            value = slopes[str(kappa)]
            self._add(
                f"Approach slope at kappa={kappa:g}",
                value,
                f"{reference} ± {settings.APPROACH_SLOPE_TOL}",
                _within(value, reference, settings.APPROACH_SLOPE_TOL),
            )
        peak = self.summary.get("series_max", {}).get("0.5")
        if peak is not None:
            self._add(
                "OE max at kappa=0.5 below 60% of log d",
                peak,
                f"< {0.6 * max_oe:.4f}",
                peak < 0.6 * max_oe,
            )

    def check_growth_rates(self) -> None:
        slopes = self.summary.get("slopes", {})
        references = (
            ("lambda_oe", settings.REFERENCE_LAMBDA_OE_SLOPES, settings.LAMBDA_OE_SLOPE_TOL),
            ("lambda_q", settings.REFERENCE_LAMBDA_Q_SLOPES, settings.LAMBDA_Q_SLOPE_TOL),
        )
        for quantity, table, tol in references:
            for d, reference in table.items():
                value = slopes.get(str(d), {}).get(quantity)
                if value is None:
                    continue
                self._add(
                    f"{quantity} slope against kappa, d={d}",
                    value,
                    f"{reference} ± {tol}",
                    _within(value, reference, tol),
                )
        low, high = settings.MONOTONE_KAPPA_RANGE
        for d, by_quantity in self.summary.get("rates", {}).items():
            for quantity, by_kappa in by_quantity.items():
                points = sorted(
                    (float(k), v) for k, v in by_kappa.items() if low <= float(k) <= high
                )
                if len(points) < 2:
                    continue
                drops = [k for (_, a), (k, b) in zip(points, points[1:]) if b <= a]
                self._add(
                    f"{quantity} increasing in kappa over [{low:g}, {high:g}], d={d}",
                    f"falls at kappa={drops[0]:g}" if drops else "increasing",
                    "increasing",
                    not drops,
                )
        if len(self.config.get("kappas", [])) < 5:
            self.notes.append("Reduced kappa grid: slopes indicate the trend only.")

    def check_oe_vs_coarse_graining(self) -> None:
        d = self.summary["d"]
        log_d = math.log(d)
        if self.summary.get("roughest_mu") == d:
            for label, value in self.summary["oe_at_roughest"].items():
                self._add(
                    f"OE at mu=d ({label})",
                    value,
                    f"log {d} ± 1e-9",
                    _within(value, log_d, 1e-9),
                )
        deviation = self.summary.get("log_mu_increment_deviation", {}).get("kappa=0.5")
        if deviation is not None:
            self._add(
                f"OE increment per doubling of {settings.LOG_MU_INCREMENT_MIN_MU} <= mu < d, kappa=0.5",
                deviation,
                f"|ΔOE / log 2 - 1| <= {settings.LOG_MU_INCREMENT_TOL}",
                deviation <= settings.LOG_MU_INCREMENT_TOL,
            )
        excess = self.summary.get("excess_over_unevolved_mu2", {}).get("kappa=7")
        if excess is not None:
            self._add(
                "OE at mu=2 above unevolved, kappa=7",
                excess,
                f">= {settings.CHAOTIC_EXCESS_NATS} nat",
                excess >= settings.CHAOTIC_EXCESS_NATS,
            )

    def check_small_spin(self) -> None:
        per_j = self.summary.get("per_j", {})
        for j in ("3.5", "4.5"):
            if j not in per_j:
                continue
            fraction = per_j[j]["oe_fraction_by_reach_step"]
            self._add(
                f"OE at j={j} reaches its max by step {settings.SMALL_SPIN_REACH_STEP}",
                fraction,
                f">= {settings.SMALL_SPIN_REACH_FRACTION}",
                fraction >= settings.SMALL_SPIN_REACH_FRACTION,
            )
            excursion = per_j[j]["oe_tail_relative_excursion"]
            self._add(
                f"OE tail at j={j} stays near its mean",
                excursion,
                f"<= {settings.SMALL_SPIN_TAIL_BAND}",
                excursion is not None and excursion <= settings.SMALL_SPIN_TAIL_BAND,
            )
        depths = {j: per_j[j]["otoc_revival_depth"] for j in ("1.5", "2.5") if j in per_j}
        if depths:
            self._add(
                "OTOC revival at j=3/2 or 5/2",
                min(depths.values()),
                f"< {settings.REVIVAL_FRACTION} of running max",
                min(depths.values()) < settings.REVIVAL_FRACTION,
            )
        slopes = {
            j: per_j[j].get("otoc_initial_slope_per_casimir") for j in ("2.5", "4.5") if j in per_j
        }
        if len(slopes) == 2 and None not in slopes.values():
            saturated = slopes["4.5"]
            ratio = abs(slopes["2.5"] - saturated) / abs(saturated) if saturated else math.inf
            self._add(
                "OTOC initial slope per j(j+1), j=5/2 against j=9/2",
                slopes,
                f"within {settings.SMALL_SPIN_SLOPE_TOL:.0%}",
                ratio <= settings.SMALL_SPIN_SLOPE_TOL,
            )

    def check_saddle_vs_chaos(self) -> None:
        tail_std = self.summary.get("tail_std", {})
        for quantity in ("fotoc", "oe"):
            stds = tail_std.get(quantity, {})
            if "saddle" not in stds or "chaotic" not in stds:
                continue
            self._add(
                f"{quantity.upper()} tail std, saddle above chaotic",
                {"saddle": stds["saddle"], "chaotic": stds["chaotic"]},
                "saddle > chaotic > 0",
                stds["saddle"] > stds["chaotic"] > 0,
            )

    def run_all_checks(self) -> bool:
        logger.info("Validating %s run", self.experiment)
        checker = getattr(self, f"check_{str(self.experiment).replace('-', '_')}", None)
        if checker is None:
            self.notes.append(f"No reference checks for {self.experiment}.")
        else:
            checker()
        for check in self.checks:
            log = logger.info if check.passed else logger.warning
            log("%s: %s (%s)", "PASS" if check.passed else "FAIL", check.name, check.value)
        return self.passed

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def generate_markdown_report(self) -> str:
        """Render the checks with the Jinja2 report template."""
        template_dir = pathlib.Path(__file__).parent / "templates"
        env = jinja2.Environment(
            loader=jinja2.FileSystemLoader(template_dir), keep_trailing_newline=True
        )
        template = env.get_template("validation_report.md.j2")
        return template.render(
            experiment=self.experiment,
            meta=self.meta,
            checks=self.checks,
            notes=self.notes,
            passed=self.passed,
        )
