"""Report, ledger, and artifact serialization.

Every command emits a versioned JSON report whose core is a property
ledger: a list of named checks, each with the measured value, its
tolerance, a pass/fail status, and a one-line mathematical statement of
what was checked. Fields go to CSV at 17 significant digits (lossless for
binary64 round-trips), branches to JSON-lines with one point per line.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .grids import Field, Grid, make_grid

SCHEMA_VERSION = 1


@dataclass
class PropertyCheck:
    name: str
    statement: str        # plain mathematical description of the check
    value: float          # measured quantity
    tolerance: float      # pass threshold (interpretation per comparison)
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["status"] = "pass" if self.passed else "fail"
        del d["passed"]
        return d


def check_leq(name: str, statement: str, value: float,
              tolerance: float) -> PropertyCheck:
    return PropertyCheck(name, statement, float(value), float(tolerance),
                         bool(value <= tolerance))


def check_flag(name: str, statement: str, flag: bool) -> PropertyCheck:
    return PropertyCheck(name, statement, float(bool(flag)), 1.0, bool(flag))


def check_eq(name: str, statement: str, value: float, target: float,
             tolerance: float) -> PropertyCheck:
    return PropertyCheck(name, statement, float(value), float(tolerance),
                         bool(abs(value - target) <= tolerance))


@dataclass
class Report:
    command: str
    config: dict
    results: dict
    ledger: list          # list of PropertyCheck
    schema_version: int = SCHEMA_VERSION

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.ledger)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "config": self.config,
            "results": _jsonable(self.results),
            "ledger": [c.to_dict() for c in self.ledger],
            "all_passed": self.all_passed,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_report(report: Report, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True)
                    + "\n")
    return path


def read_report(path) -> dict:
    return json.loads(Path(path).read_text())


def field_to_csv(f: Field, path) -> Path:
    """x,value rows plus a header carrying the grid geometry."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write(f"# grid length={f.grid.length!r} n={f.grid.n}\n")
        fh.write("x,value\n")
        for x, v in zip(f.grid.x, f.values):
            fh.write(f"{x:.17g},{v:.17g}\n")
    return path


def field_from_csv(path) -> Field:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline()
    if not header.startswith("# grid length="):
        raise ValueError(f"{path} is not a field CSV")
    parts = header.split()
    length = float(parts[2].split("=")[1])
    n = int(parts[3].split("=")[1])
    data = np.loadtxt(path, delimiter=",", skiprows=2)
    grid = make_grid(length, n)
    if data.shape[0] != n:
        raise ValueError(f"{path}: expected {n} rows, got {data.shape[0]}")
    return Field(grid, np.ascontiguousarray(data[:, 1]))


def extension_to_csv(ext, path, max_levels: int = 64) -> Path:
    """x,y,u triplets, subsampling the levels to keep the file tractable."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stride = max(1, ext.levels.size // max_levels)
    with path.open("w") as fh:
        fh.write("x,y,u\n")
        for i in range(0, ext.levels.size, stride):
            y = ext.levels[i]
            for x, v in zip(ext.grid.x, ext.values[i]):
                fh.write(f"{x:.17g},{y:.17g},{v:.17g}\n")
    return path


def branch_to_jsonl(branch, path, field_dir=None) -> Path:
    """One JSON object per branch point; fields as CSV side files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for i, pt in enumerate(branch.points):
            entry = {
                "s": pt.s,
                "lambda": pt.lam,
                "monitors": _jsonable(pt.monitors),
            }
            if field_dir is not None:
                fpath = Path(field_dir) / f"branch_point_{i:04d}.csv"
                field_to_csv(pt.field, fpath)
                entry["field_file"] = str(fpath)
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    return path


def branch_manifest(branch, config: dict) -> dict:
    grid = branch.points[0].field.grid
    return {
        "alpha": branch.alpha,
        "s0": branch.s0,
        "c0": branch.c0,
        "n_points": len(branch.points),
        "s_end": branch.points[-1].s,
        "lambda_end": branch.points[-1].lam,
        "termination": branch.termination,
        "detail": branch.detail,
        "grid": {"length": grid.length, "n": grid.n},
        "config": config,
    }


def default_output_root() -> Path:
    return Path(os.environ.get("FRACGROUND_OUT", "runs"))
