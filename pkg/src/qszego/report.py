"""Run configuration, random streams and deterministic report output."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances

FLOAT_DIGITS = 12


@dataclass(frozen=True)
class RunConfig:
    n: int = 2
    c: float = 1.0
    seed: int = 0
    samples: int | None = None
    tol_scale: float = 1.0
    threads: int = 1
    out: str | None = None
    csv: bool = False

    @property
    def tol(self) -> Tolerances:
        return DEFAULT_TOLERANCES if self.tol_scale == 1.0 else DEFAULT_TOLERANCES.scaled(self.tol_scale)

    def rng(self, battery: str, purpose: str) -> np.random.Generator:
        """Independent stream per (battery, purpose); adding streams never shifts others."""
        key = (zlib.crc32(battery.encode()), zlib.crc32(purpose.encode()))
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=key))

    def count(self, default: int) -> int:
        return int(self.samples) if self.samples else default

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")
        d.pop("threads")
        return d

    @property
    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


@dataclass
class BatteryResult:
    name: str
    passed: bool
    claim: str
    measured: dict
    expected: dict
    warn: bool = False
    runtime: float = field(default=0.0, compare=False)
    series: list = field(default_factory=list, compare=False)

    @property
    def status(self) -> str:
        if not self.passed:
            return "fail"
        return "warn" if self.warn else "pass"

    def to_json(self) -> dict:
        return {
            "name": self.name, "status": self.status, "claim": self.claim,
            "measured": self.measured, "expected": self.expected,
        }


def clean(obj):
    """Plain JSON types with rounded floats so reports are byte-stable."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return clean(dataclasses.asdict(obj))
    if hasattr(obj, "to_json"):
        return clean(obj.to_json())
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{FLOAT_DIGITS}g}")
    return obj


def build_report(cfg: RunConfig, results) -> dict:
    results = list(results)
    return {
        "config": cfg.as_dict(),
        "config_hash": cfg.digest,
        "seed": cfg.seed,
        "status": "fail" if any(not r.passed for r in results) else "pass",
        "batteries": [r.to_json() for r in results],
    }


def dumps(report: dict) -> str:
    return json.dumps(clean(report), sort_keys=True, indent=2) + "\n"


def write_outputs(cfg: RunConfig, results, stem: str = "report") -> dict:
    """Write the JSON report, a timings sidecar and optional CSV series; return the report."""
    results = list(results)
    report = build_report(cfg, results)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.json").write_text(dumps(report))
        timings = {r.name: round(r.runtime, 3) for r in results}
        (out / f"{stem}.timings.json").write_text(json.dumps(timings, sort_keys=True, indent=2) + "\n")
        if cfg.csv:
            for r in results:
                if r.series:
                    write_csv(out / f"{r.name}.csv", r.series)
    return report


def write_csv(path, rows) -> None:
    rows = [clean(r) for r in rows]
    keys = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
