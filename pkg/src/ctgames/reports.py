"""Report assembly and emission: deterministic JSON, derived CSV.

The JSON body (command, config, results, bounds) is a pure function of the
configuration and seed, so identical runs produce identical bytes; wall
clock and timestamp live in the separate "meta" object. Every CSV cell is
copied from the JSON results, never recomputed, which keeps the two
artifacts consistent by construction.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import UsageError


@dataclass
class ExperimentReport:
    command: str
    config: dict
    results: list[dict]
    bounds: list[dict]  # [{"name": ..., "holds": bool}, ...]
    figures: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(b["holds"] for b in self.bounds)

    def body(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "bounds": self.bounds,
            "figures": self.figures,
            "passed": self.passed,
        }

    def to_json(self) -> dict:
        out = self.body()
        out["meta"] = self.meta
        return out


def body_bytes(report: ExperimentReport) -> bytes:
    """Serialized report without meta; the determinism contract's subject."""
    return (json.dumps(report.body(), indent=2) + "\n").encode()


class StopWatch:
    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self._t0
        return False


def finalize_meta(report: ExperimentReport, elapsed: float) -> None:
    report.meta = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "wall_clock_s": round(elapsed, 6),
        "version": __version__,
    }


def csv_text(report: ExperimentReport) -> str:
    """Flat CSV of the results rows' scalar columns.

    Nested structures (per-atom arrays, loss breakdowns) stay in the JSON
    report; every remaining cell is copied verbatim.
    """
    if not report.results:
        raise UsageError("no result rows to serialize")
    columns = [k for k, v in report.results[0].items()
               if not isinstance(v, (dict, list))]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore",
                            lineterminator="\n")
    writer.writeheader()
    for row in report.results:
        writer.writerow({k: _cell(row.get(k)) for k in columns})
    return buf.getvalue()


def _cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    return value


def write_report(report: ExperimentReport, out_dir: str | Path,
                 fmt: str = "both") -> list[Path]:
    """Write <command>.json / <command>.csv per the requested format."""
    if fmt not in ("json", "csv", "both"):
        raise UsageError(f"unknown format {fmt!r}; expected json, csv, or both")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in ("json", "both"):
        path = out / f"{report.command}.json"
        path.write_text(json.dumps(report.to_json(), indent=2) + "\n")
        written.append(path)
    if fmt in ("csv", "both"):
        path = out / f"{report.command}.csv"
        path.write_text(csv_text(report))
        written.append(path)
    return written
