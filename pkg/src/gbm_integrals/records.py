"""Flat output records and their CSV / JSON encodings."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, is_dataclass
from enum import Enum
from typing import Iterable, Optional

from .estimators import EstimateWithCI, IdentityReport

CSV_COLUMNS = ("id", "t", "a", "nu", "n", "estimate", "stderr", "trimmed", "max_sample", "z", "pass")


def estimate_record(ident: str, est: EstimateWithCI, *, t=None, a=None, nu=None,
                    z: Optional[float] = None, passed: Optional[bool] = None) -> dict:
    return {
        "id": ident, "t": t, "a": a, "nu": nu, "n": est.n_samples,
        "estimate": est.mean, "stderr": est.stderr, "trimmed": est.trimmed_mean,
        "max_sample": est.max_sample, "z": z, "pass": passed,
    }


def report_records(report: IdentityReport, lhs_id: str, rhs_id: str) -> list:
    p = report.params
    a = p.get("a", 2.0 / p["y"] if "y" in p else None)
    common = dict(t=p.get("t"), a=a, nu=p.get("nu"), z=report.z_score, passed=report.passed)
    return [estimate_record(lhs_id, report.lhs, **common), estimate_record(rhs_id, report.rhs, **common)]


def value_record(ident: str, value: float, *, t=None, a=None, nu=None, n=None, passed=None) -> dict:
    return {"id": ident, "t": t, "a": a, "nu": nu, "n": n, "estimate": value, "stderr": None,
            "trimmed": None, "max_sample": None, "z": None, "pass": passed}


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def to_csv(records: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_cell(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def _plain(obj):
    if is_dataclass(obj):
        return _plain(asdict(obj))
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if hasattr(obj, "item"):
        return _plain(obj.item())
    return obj


def to_json(payload) -> str:
    return json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n"
