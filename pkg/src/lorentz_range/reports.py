"""Experiment reports and their JSON / CSV forms."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np


def _clean(x):
    """Make a value JSON-safe; non-finite floats become strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


@dataclass
class ExperimentReport:
    experiment: str
    corpus: dict
    samples: list
    passed: bool
    ms: float = 0.0
    notes: dict = field(default_factory=dict)

    @property
    def max(self) -> float | None:
        v = self._finite()
        return float(np.max(v)) if len(v) else None

    @property
    def median(self) -> float | None:
        v = self._finite()
        return float(np.median(v)) if len(v) else None

    @property
    def min(self) -> float | None:
        v = self._finite()
        return float(np.min(v)) if len(v) else None

    def _finite(self) -> np.ndarray:
        v = np.asarray([s for s in self.samples if s is not None], dtype=float)
        return v[np.isfinite(v)]

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "experiment": self.experiment,
            "corpus": self.corpus,
            "samples": self.samples,
            "max": self.max,
            "median": self.median,
            "min": self.min,
            "pass": self.passed,
        }
        if self.notes:
            d["notes"] = self.notes
        if timing:
            d["ms"] = round(self.ms, 3)
        return _clean(d)

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True)

    def csv_rows(self) -> list[tuple]:
        return [(self.experiment, i, v) for i, v in enumerate(self.samples)]


def reports_to_json(reports, timing: bool = True) -> str:
    return json.dumps([r.to_dict(timing) for r in reports], sort_keys=True, indent=1)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "sample_id", "ratio"])
    for r in reports:
        for row in r.csv_rows():
            w.writerow([row[0], row[1], fmt(row[2])])
    return buf.getvalue()


def fmt(x) -> str:
    """12 significant digits, the precision regression files are frozen at."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"
