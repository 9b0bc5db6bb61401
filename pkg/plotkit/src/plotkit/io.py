"""Loading and validation of diagnosis run logs.

The per-step CSV schema and the vertex-snapshot JSONL sidecar are produced
by the scenario runner; this package only reads them.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import pandas as pd


class SchemaError(ValueError):
    """A log file does not match the expected schema."""


EXPECTED_COLUMNS = (
    ["k", "t"]
    + [f"z{i}" for i in range(6)]
    + [f"y{i}" for i in range(6)]
    + [f"u{i}" for i in range(5)]
    + [f"theta_hat{i}" for i in range(3)]
    + [f"proj_lo{i}" for i in range(3)]
    + [f"proj_hi{i}" for i in range(3)]
    + ["empty_flag", "event", "step_ms"]
)

TRACE_COLUMNS = (
    ["k", "t"]
    + [f"theta_hat{i}" for i in range(3)]
    + [f"proj_lo{i}" for i in range(3)]
    + [f"proj_hi{i}" for i in range(3)]
    + ["event"]
)


def load_run(path) -> pd.DataFrame:
    """Read a run CSV and verify the columns needed for plotting."""
    df = pd.read_csv(path, keep_default_na=False, na_values=[])
    for col in TRACE_COLUMNS:
        if col not in df.columns:
            raise SchemaError(f"{path}: missing required column {col!r}")
    return df


def events_from_run(df: pd.DataFrame) -> list[dict]:
    """Detection/isolation markers extracted from the event column."""
    out = []
    for _, row in df[df["event"].astype(str) != ""].iterrows():
        for token in str(row["event"]).split(";"):
            if token == "detect":
                out.append({"type": "detect", "t": row["t"], "k": row["k"]})
            elif token.startswith("isolate:"):
                out.append(
                    {
                        "type": "isolate",
                        "axis": int(token.split(":")[1]),
                        "t": row["t"],
                        "k": row["k"],
                    }
                )
    return out


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".vertices.jsonl")


def load_snapshots(csv_path) -> list[dict]:
    """Vertex snapshots accompanying a run CSV."""
    path = sidecar_path(csv_path)
    if not path.exists():
        raise SchemaError(f"no vertex snapshot file found at {path}")
    snaps = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                snaps.append(json.loads(line))
    if not snaps:
        raise SchemaError(f"{path}: no snapshot records")
    for snap in snaps:
        for key in ("k", "vertices"):
            if key not in snap:
                raise SchemaError(f"{path}: snapshot record missing {key!r}")
    return snaps


def nearest_snapshot(snaps: list[dict], k: int) -> dict:
    """Snapshot at step k, or the nearest logged one with a warning."""
    best = min(snaps, key=lambda s: abs(s["k"] - k))
    if best["k"] != k:
        warnings.warn(
            f"no snapshot at step {k}; using nearest logged step {best['k']}",
            stacklevel=2,
        )
    return best
