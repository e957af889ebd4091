"""Deterministic output files: report.json, table.csv and two-column .dat."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from .._kernels import BACKEND
from .config import ExperimentConfig
from .experiments import Outcome


def _clean(x):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings, tuples as lists."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def fingerprint() -> dict:
    return {
        "package": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "backend": BACKEND,
    }


def build_report(cfg: ExperimentConfig, outcome: Outcome) -> dict:
    return _clean(
        {
            "kind": cfg.kind,
            "config": cfg.to_json(),
            "environment": fingerprint(),
            "results": outcome.report,
            "warnings": outcome.warnings,
            "truncated": bool(outcome.warnings),
            "assertions": outcome.assertions,
            "passed": outcome.passed,
        }
    )


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def dat_text(pairs) -> str:
    return "".join(f"{x!r} {y!r}\n" for x, y in pairs)


def write_outputs(outdir: str | Path, cfg: ExperimentConfig, outcome: Outcome) -> list[Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    p = out / "report.json"
    p.write_text(dumps_report(build_report(cfg, outcome)))
    written.append(p)
    if outcome.table is not None:
        p = out / "table.csv"
        p.write_text(table_csv(*outcome.table))
        written.append(p)
    for name in sorted(outcome.dat):
        p = out / f"{name}.dat"
        p.write_text(dat_text(outcome.dat[name]))
        written.append(p)
    return written
