"""Writing experiment results: tables as CSV or JSON, plus summary.json.

Outputs carry no timestamps, so a rerun with the same configuration and seed
writes byte-identical files.
"""

import json
import logging
import pathlib
from typing import Any

import pandas as pd

from qkt import settings, utils
from qkt.experiments.config import RunConfig
from qkt.experiments.core import RunResult

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"


def result_meta(result: RunResult, cfg: RunConfig) -> dict[str, Any]:
    """Metadata block shared by every file of a run."""
    return {
        "experiment": result.experiment,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "code_version": settings.VERSION,
        **result.meta,
    }


def _header_value(value: Any) -> str:
    if isinstance(value, str):
        return value
    return json.dumps(utils.to_python(value), sort_keys=True)


def write_csv(table: pd.DataFrame, path: pathlib.Path, meta: dict[str, Any]) -> None:
    """Write ``# key: value`` metadata lines, then the table."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        for key, value in meta.items():
            f.write(f"# {key}: {_header_value(value)}\n")
        table.to_csv(f, index=False, lineterminator="\n")


def read_csv(path: pathlib.Path) -> tuple[dict[str, str], pd.DataFrame]:
    """Inverse of write_csv: header metadata (as text) and the table."""
    meta = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].rstrip("\n").partition(": ")
            meta[key] = value
    return meta, pd.read_csv(path, skiprows=len(meta))


def table_series(table: pd.DataFrame, keys: list[str]) -> list[dict[str, Any]]:
    """Split a table into one ``{"meta", "data"}`` object per distinct key."""
    if not keys:
        return [{"meta": {}, "data": {c: table[c].tolist() for c in table.columns}}]
    series = []
    for values, group in table.groupby(keys, sort=False, dropna=False):
        values = values if isinstance(values, tuple) else (values,)
        data = group.drop(columns=keys)
        series.append(
            {
                "meta": dict(zip(keys, values)),
                "data": {c: data[c].tolist() for c in data.columns},
            }
        )
    return series


def write_json(
    table: pd.DataFrame, keys: list[str], path: pathlib.Path, meta: dict[str, Any]
) -> None:
    payload = {"meta": meta, "series": table_series(table, keys)}
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(utils.to_python(payload), f, indent=2, sort_keys=True)
        f.write("\n")


def write_result(result: RunResult, cfg: RunConfig, out_dir: pathlib.Path) -> list[pathlib.Path]:
    """Write every table of ``result`` and the run summary into ``out_dir``."""
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = result_meta(result, cfg)

    written = []
    for name, table in result.tables.items():
        path = out_dir / f"{name}.{cfg.format}"
        if cfg.format == "csv":
            write_csv(table, path, meta)
        else:
            write_json(table, result.series_keys.get(name, []), path, meta)
        logger.info("Wrote %d rows to %s", len(table), path)
        written.append(path)

    summary_path = out_dir / SUMMARY_FILE
    payload = {
        "meta": meta,
        "config": {k: v for k, v in cfg.as_dict().items() if k != "out"},
        "summary": result.summary,
    }
    with open(summary_path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(utils.to_python(payload), f, indent=2, sort_keys=True)
        f.write("\n")
    written.append(summary_path)
    return written


def load_summary(out_dir: pathlib.Path) -> dict[str, Any]:
    path = pathlib.Path(out_dir) / SUMMARY_FILE
    with open(path, encoding="utf-8") as f:
        return json.load(f)
