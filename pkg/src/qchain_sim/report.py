"""Reports and their canonical serializations."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

REPORT_FORMAT = 1


@dataclass(frozen=True)
class Metric:
    name: str
    value: Any
    units: str = ""


@dataclass(frozen=True)
class Expectation:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Report:
    scenario: str
    master_seed: int
    params: dict
    results: list[Metric] = field(default_factory=list)
    digests: dict[str, str] = field(default_factory=dict)
    expectations: list[Expectation] = field(default_factory=list)
    wall_time: float = 0.0  # seconds; text footer only, never in JSON

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.expectations)

    def metric(self, name: str) -> Any:
        for m in self.results:
            if m.name == name:
                return m.value
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "config": {
                "scenario": self.scenario,
                "master_seed": self.master_seed,
                "params": self.params,
            },
            "results": [{"name": m.name, "value": m.value, "units": m.units} for m in self.results],
            "digests": dict(self.digests),
            "expectations": [
                {"name": e.name, "passed": e.passed, "detail": e.detail} for e in self.expectations
            ],
            "passed": self.passed,
        }


def plain(value: Any) -> Any:
    """Convert numpy scalars/arrays and tuples into JSON-native values."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not math.isfinite(value):
        raise ValueError(f"non-finite value {value} cannot be reported")
    if isinstance(value, bytes):
        return value.hex()
    return value


def canonical_json(obj: Any) -> bytes:
    # Python's float repr is the shortest round-trip decimal
    text = json.dumps(plain(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False)
    return text.encode("ascii") + b"\n"


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, dict)):
        return json.dumps(plain(value), sort_keys=True, separators=(",", ":"))
    return str(value)


def render_text(report: Report) -> str:
    lines = [f"qchain-sim {report.scenario} (seed {report.master_seed}): {len(report.results)} metrics"]
    width = max([len(m.name) for m in report.results] + [6])
    for m in report.results:
        lines.append(f"  {m.name:<{width}}  {_fmt(m.value):>14}  {m.units}".rstrip())
    ok = sum(e.passed for e in report.expectations)
    verdict = "PASS" if report.passed else "FAIL"
    lines.append(
        f"expectations {ok}/{len(report.expectations)} {verdict}; wall time {report.wall_time:.3f} s"
    )
    return "\n".join(lines) + "\n"


def emit(report: Report, fmt: str = "json") -> bytes:
    if fmt == "json":
        return canonical_json(report.to_json())
    if fmt == "text":
        return render_text(report).encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}; expected json or text")
