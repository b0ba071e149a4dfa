"""
Versioned artifact writers and the schema check behind ``schema-check``.

Every CSV the workbench emits is registered in ``CSV_SCHEMAS`` with a version;
a bump is required whenever a column is added, removed or reordered.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.domain.errors import SchemaError
from src.domain.models import ROUNDS_CSV_COLUMNS, SimResult
from sb_utils.file_utils import write_csv, write_json
from sb_utils.logger_utils import logger

CSV_SCHEMAS: Dict[str, dict] = {
    "rounds": {"version": 1, "columns": list(ROUNDS_CSV_COLUMNS)},
    "compare": {
        "version": 1,
        "columns": ["protocol", "seed", "fnd", "hnd", "lnd", "pdr", "control_packets", "reclusters", "rounds"],
    },
    "ch_histogram": {"version": 1, "columns": ["protocol", "ch_count", "rounds"]},
    "sweep": {"version": 2, "columns": ["alpha", "beta", "gamma", "seed", "metric", "value"]},
    "actions": {
        "version": 1,
        "columns": [
            "protocol",
            "seed",
            "round",
            "action",
            "rounds_since_recluster",
            "alive_before",
            "e_net_before_j",
            "e_dissipated_avg_j",
            "ch_count",
        ],
    },
    "recluster_frequency": {
        "version": 1,
        "columns": ["protocol", "seed", "window_end", "reclusters", "frequency", "energy_j"],
    },
    "pdr": {"version": 1, "columns": ["protocol", "runs", "median", "min", "max"]},
    "accuracy": {"version": 1, "columns": ["predictor", "split", "rows", "accuracy"]},
}

# Matrix files (heatmaps, confusion matrices, sweep projections) have a label
# column followed by one column per grid value, so only their first cell is fixed.
MATRIX_SCHEMA = {"version": 1, "first_column": "row"}


def write_rounds_csv(path: Path, result: SimResult) -> Path:
    return write_csv(path, CSV_SCHEMAS["rounds"]["columns"], (m.as_row() for m in result.per_round))


def write_summary(path: Path, result: SimResult, extra: Optional[dict] = None) -> Path:
    payload = result.summary()
    payload["schema_versions"] = {"rounds": CSV_SCHEMAS["rounds"]["version"]}
    if extra:
        payload.update(extra)
    return write_json(path, payload)


def write_matrix_csv(
    path: Path, matrix: np.ndarray, row_labels: Sequence, col_labels: Sequence
) -> Path:
    header = ["row"] + [str(c) for c in col_labels]
    rows = ([str(r)] + [float(v) for v in matrix[i]] for i, r in enumerate(row_labels))
    return write_csv(path, header, rows)


def write_schema_manifest(out_dir: Path) -> Path:
    return write_json(Path(out_dir) / "schemas.json", {"csv": CSV_SCHEMAS, "matrix": MATRIX_SCHEMA})


def _check_cells(path: Path, rows: List[List[str]], width: int) -> None:
    for lineno, row in enumerate(rows, start=2):
        if len(row) != width:
            raise SchemaError(f"{path}:{lineno}: expected {width} cells, found {len(row)}")


def schema_check(path: Path) -> str:
    """Identify which registered schema ``path`` follows and validate every row; returns its name."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        rows = list(reader)
    if not header:
        raise SchemaError(f"{path}: empty file")

    for name, schema in CSV_SCHEMAS.items():
        if header == schema["columns"]:
            _check_cells(path, rows, len(header))
            logger.info(
                "Schema check passed",
                extra={"component": "artifacts", "path": str(path), "schema": name, "rows": len(rows)},
            )
            return name

    if header[0] == MATRIX_SCHEMA["first_column"] and len(header) > 1:
        _check_cells(path, rows, len(header))
        for lineno, row in enumerate(rows, start=2):
            try:
                [float(v) for v in row[1:]]
            except ValueError as e:
                raise SchemaError(f"{path}:{lineno}: non-numeric matrix cell ({e})") from e
        return "matrix"

    raise SchemaError(f"{path}: header matches no registered schema")
