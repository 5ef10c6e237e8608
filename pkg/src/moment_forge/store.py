"""Append-only report store: timestamped JSON documents plus a CSV index.

Every saved report becomes one JSON file (with a `schema` version field) and
exactly one row in `index.csv`; the index never references a missing file and
every file has its row.  Numeric fields are written with repr-level precision
so re-running an identical configuration reproduces identical bytes in the
numeric columns.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

SCHEMA_VERSION = 1

INDEX_COLUMNS = (
    "timestamp",
    "kind",
    "file",
    "q",
    "sigma0",
    "t0",
    "lhs_re",
    "lhs_im",
    "main_term",
    "residual_re",
    "residual_im",
    "identity_gap",
    "slope",
)


class StoreError(OSError):
    """Report store I/O problem (unwritable directory, index corruption)."""


def _format(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


class ReportStore:
    """Single-writer store rooted at a directory."""

    def __init__(self, root) -> None:
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StoreError(f"cannot create report store at {self.root}: {e}") from e
        self.index_path = self.root / "index.csv"

    def _next_name(self, kind: str) -> str:
        stamp = time.strftime("%Y%m%dT%H%M%S")
        seq = 0
        while True:
            name = f"{kind}-{stamp}-{seq:03d}.json"
            if not (self.root / name).exists():
                return name
            seq += 1

    def save(self, kind: str, payload: dict, index_fields: dict | None = None) -> Path:
        """Persist one report; returns the JSON file path."""
        name = self._next_name(kind)
        path = self.root / name
        document = {"schema": SCHEMA_VERSION, "kind": kind, **payload}
        try:
            path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
        except OSError as e:
            raise StoreError(f"cannot write report {path}: {e}") from e
        row = {col: "" for col in INDEX_COLUMNS}
        row["timestamp"] = name.split("-")[-2]
        row["kind"] = kind
        row["file"] = name
        for key, value in (index_fields or {}).items():
            if key not in INDEX_COLUMNS:
                raise ValueError(f"unknown index column {key!r}")
            row[key] = _format(value)
        try:
            fresh = not self.index_path.exists()
            with self.index_path.open("a", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=INDEX_COLUMNS)
                if fresh:
                    writer.writeheader()
                writer.writerow(row)
        except OSError as e:
            raise StoreError(f"cannot append to index {self.index_path}: {e}") from e
        return path

    def index_rows(self) -> list[dict]:
        if not self.index_path.exists():
            return []
        with self.index_path.open(newline="") as fh:
            return list(csv.DictReader(fh))

    def verify_integrity(self) -> None:
        """Check the 1:1 correspondence between index rows and report files."""
        rows = self.index_rows()
        files = sorted(p.name for p in self.root.glob("*.json"))
        indexed = sorted(row["file"] for row in rows)
        if indexed != files:
            missing = set(indexed) - set(files)
            orphans = set(files) - set(indexed)
            raise StoreError(
                f"index/file mismatch in {self.root}: "
                f"missing files {sorted(missing)}, unindexed files {sorted(orphans)}"
            )

    def load(self, name: str) -> dict:
        path = self.root / name
        try:
            return json.loads(path.read_text())
        except OSError as e:
            raise StoreError(f"cannot read report {path}: {e}") from e
