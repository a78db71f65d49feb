"""Check records, scenario reports and their serializations."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

from . import __version__

SCHEMA_VERSION = "1"
STATUSES = ("pass", "fail", "undetermined")


def fmt12(x: Optional[float]) -> Optional[str]:
    """Decimal string with 12 significant digits (None stays None)."""
    if x is None:
        return None
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    return f"{x:.11e}"


def _plain(v):
    """Make witness values JSON friendly and deterministic."""
    if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
        return v
    if isinstance(v, float):
        return fmt12(v)
    if hasattr(v, "item") and getattr(v, "ndim", 1) == 0:
        return _plain(v.item())
    if isinstance(v, dict):
        return {str(k): _plain(v[k]) for k in v}
    if isinstance(v, (list, tuple)) or hasattr(v, "tolist"):
        seq = v.tolist() if hasattr(v, "tolist") else v
        return [_plain(x) for x in seq]
    return str(v)


@dataclass
class CheckRecord:
    name: str
    reference: str
    status: str
    deviation: Optional[float] = None
    witnesses: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"bad status {self.status!r}")

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "reference": self.reference,
            "status": self.status,
            "deviation": fmt12(self.deviation),
            "deviation_repr": None if self.deviation is None else repr(float(self.deviation)),
            "witnesses": _plain(self.witnesses),
        }


@dataclass
class Report:
    scenario: str
    params: dict
    seed: int
    samples: int
    checks: list
    tolerances: dict
    timing: dict = field(default_factory=dict)
    version: str = __version__

    @property
    def exit_code(self) -> int:
        return 1 if any(c.status == "fail" for c in self.checks) else 0

    def counts(self) -> dict:
        return {s: sum(c.status == s for c in self.checks) for s in STATUSES}

    def as_dict(self, include_timing: bool = True) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "version": self.version,
            "scenario": self.scenario,
            "params": _plain(self.params),
            "seed": self.seed,
            "samples": self.samples,
            "tolerances": _plain(self.tolerances),
            "summary": self.counts(),
            "checks": [c.as_dict() for c in self.checks],
        }
        if include_timing:
            out["timing"] = {k: round(float(v), 6) for k, v in self.timing.items()}
        return out


def to_json(reports, include_timing: bool = True) -> str:
    if isinstance(reports, Report):
        payload = reports.as_dict(include_timing)
    else:
        payload = {"schema_version": SCHEMA_VERSION,
                   "reports": [r.as_dict(include_timing) for r in reports]}
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


CSV_FIELDS = ["scenario", "name", "reference", "status", "deviation"]


def to_csv(reports) -> str:
    reports = [reports] if isinstance(reports, Report) else list(reports)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in reports:
        for c in r.checks:
            w.writerow([r.scenario, c.name, c.reference, c.status, fmt12(c.deviation) or ""])
    return buf.getvalue()


def to_text(reports) -> str:
    reports = [reports] if isinstance(reports, Report) else list(reports)
    lines = []
    for r in reports:
        n = r.counts()
        lines.append(f"scenario {r.scenario} (seed {r.seed}, samples {r.samples}): "
                     f"{n['pass']} pass, {n['fail']} fail, {n['undetermined']} undetermined")
        for c in r.checks:
            dev = "" if c.deviation is None else f"  dev={fmt12(c.deviation)}"
            lines.append(f"  [{c.status:>12}] {c.name}{dev}")
    return "\n".join(lines) + "\n"


def emit_report(reports, fmt: str = "json", include_timing: bool = True) -> str:
    if fmt == "json":
        return to_json(reports, include_timing)
    if fmt == "csv":
        return to_csv(reports)
    if fmt == "text":
        return to_text(reports)
    raise ValueError(f"unknown format {fmt!r}")
