"""Writing run results to disk.

CSV floats use ``%.17g`` so they round-trip exactly; headers read
``name [unit]``.  JSON-lines rows use the shortest round-trip repr.  In
both formats non-finite floats are written as ``inf``, ``-inf`` or
``nan`` (strings in JSON), and missing values as empty / ``null``.

``metadata.json`` depends only on the config and the package version, so
repeated runs produce identical bytes.  Wall time goes to ``timing.json``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .experiments import RunResult, Table


def _plain(value: Any) -> Any:
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if not math.isfinite(value):
            return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
        return value
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    return value


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return "%.17g" % value
    return str(value)


def write_csv(table: Table, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{name} [{unit}]" for name, unit in table.columns])
        for row in table.rows:
            w.writerow([_csv_cell(v) for v in row])


def write_jsonl(table: Table, path: Path) -> None:
    names = [name for name, _ in table.columns]
    with path.open("w", encoding="utf-8") as fh:
        for row in table.rows:
            fh.write(json.dumps(dict(zip(names, _plain(row))), allow_nan=False) + "\n")


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def metadata(config_json: str, version: str, seed: int, result: RunResult) -> dict[str, Any]:
    return {
        "config": json.loads(config_json),
        "package_version": version,
        "seed": seed,
        "summary": _plain(result.summary),
        "tables": {name: [f"{c} [{u}]" for c, u in t.columns] for name, t in result.tables.items()},
    }


def write_result(
    out_dir: Path,
    result: RunResult,
    config_json: str,
    version: str,
    seed: int,
    formats: list[str],
    wall_time: float,
) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in result.tables.items():
        if "csv" in formats:
            p = out_dir / f"{name}.csv"
            write_csv(table, p)
            written.append(p)
        if "jsonl" in formats:
            p = out_dir / f"{name}.jsonl"
            write_jsonl(table, p)
            written.append(p)
    meta = out_dir / "metadata.json"
    meta.write_text(json.dumps(metadata(config_json, version, seed, result), sort_keys=True, indent=2,
                               allow_nan=False) + "\n", encoding="utf-8")
    (out_dir / "config.json").write_text(config_json, encoding="utf-8")
    timing = out_dir / "timing.json"
    timing.write_text(json.dumps({"wall_time_s": wall_time}) + "\n", encoding="utf-8")
    return written + [meta, out_dir / "config.json", timing]
