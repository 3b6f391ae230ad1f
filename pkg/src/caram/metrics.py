"""End-of-run report, headline metrics and serialization."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, Iterable, List, Optional

SCHEMA = "report_v1"


class AccountingError(RuntimeError):
    pass


def space_occupation_ratio(live_bytes: int, metadata_bytes: int, capacity_bytes: int) -> float:
    """Physical bytes in use (data plus any charged metadata) over capacity."""
    if capacity_bytes <= 0:
        raise ValueError("capacity must be positive")
    ratio = (live_bytes + metadata_bytes) / capacity_bytes
    if ratio > 1.0:
        raise AccountingError(f"occupation {ratio:.4f} exceeds capacity")
    return ratio


def normalized_occupation(ratio: float, dram_ratio: float) -> float:
    """Occupation relative to pure DRAM on the same workload (DRAM == 1)."""
    if dram_ratio <= 0:
        return 0.0
    return ratio / dram_ratio


def bandwidth(total_payload_bytes: int, total_cycles: int) -> float:
    if total_cycles <= 0:
        raise ValueError("cycles must be positive")
    return total_payload_bytes / total_cycles


@dataclass
class DedupSummary:
    dropped: int = 0
    shared: int = 0
    updated: int = 0
    new: int = 0
    collisions: int = 0
    overflow_copies: int = 0


@dataclass
class WearSummary:
    rows: int = 0
    min: int = 0
    max: int = 0
    mean: float = 0.0
    total: int = 0

    @classmethod
    def of(cls, hist: List[int]) -> "WearSummary":
        if not hist:
            return cls()
        total = sum(hist)
        return cls(len(hist), min(hist), max(hist), total / len(hist), total)


@dataclass
class SimReport:
    arch: str
    workload: str = ""
    schema: str = SCHEMA
    total_cycles: int = 0
    read_requests: int = 0
    write_requests: int = 0
    read_hits: int = 0
    read_misses: int = 0
    line_writes: int = 0
    dram_line_writes: int = 0
    pcm_line_writes: int = 0
    drain_writes: int = 0
    drain_episodes: int = 0
    evicted_pages: int = 0
    unique_lines_live: int = 0
    live_bytes: int = 0
    metadata_bytes: int = 0
    capacity_bytes: int = 0
    charge_metadata: bool = True
    space_occupation_ratio: float = 0.0
    bandwidth_bytes_per_cycle: float = 0.0
    requests_per_kcycle: float = 0.0
    energy_mj: Dict[str, object] = field(default_factory=dict)
    dedup: DedupSummary = field(default_factory=DedupSummary)
    wear: WearSummary = field(default_factory=WearSummary)
    device_counts: Dict[str, Dict[str, int]] = field(default_factory=dict)
    invariant_violations: List[str] = field(default_factory=list)

    def __post_init__(self):
        if isinstance(self.dedup, dict):
            self.dedup = DedupSummary(**self.dedup)
        if isinstance(self.wear, dict):
            self.wear = WearSummary(**self.wear)

    @property
    def ok(self) -> bool:
        return not self.invariant_violations

    @property
    def total_energy_mj(self) -> float:
        return float(self.energy_mj.get("total_mj", 0.0))

    def check_partition(self) -> Optional[str]:
        d = self.dedup
        s = d.dropped + d.shared + d.updated + d.new
        if s != self.write_requests:
            return f"write outcomes {s} != write requests {self.write_requests}"
        return None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimReport":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def flat(self) -> Dict[str, object]:
        """Scalar view used for CSV rows."""
        row = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("energy_mj",):
                row["energy_total_mj"] = v.get("total_mj", 0.0)
                for dev in ("dram", "pcm"):
                    row[f"energy_{dev}_mj"] = v.get(dev, {}).get("total_mj", 0.0)
            elif f.name == "dedup":
                for k, x in asdict(v).items():
                    row[f"dedup_{k}"] = x
            elif f.name == "wear":
                for k, x in asdict(v).items():
                    row[f"wear_{k}"] = x
            elif f.name == "device_counts":
                continue
            elif f.name == "invariant_violations":
                row["invariant_violations"] = len(v)
            else:
                row[f.name] = v
        return row


CSV_COLUMNS = list(SimReport(arch="").flat().keys())
FIGURE_COLUMNS = ["workload", "arch", "space_occupation_ratio", "normalized_occupation",
                  "bandwidth_bytes_per_cycle", "requests_per_kcycle", "energy_total_mj"]


def emit_report(report: SimReport, format: str = "json") -> bytes:
    if format == "json":
        return (json.dumps(report.to_dict(), indent=2, sort_keys=False) + "\n").encode()
    if format == "csv":
        return emit_csv([report])
    if format == "table":
        return format_table([report]).encode()
    raise ValueError(f"unknown report format {format!r}")


def parse_report(data: bytes) -> SimReport:
    return SimReport.from_dict(json.loads(data))


def emit_csv(reports: Iterable[SimReport]) -> bytes:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.flat())
    return buf.getvalue().encode()


def figure_rows(reports: Iterable[SimReport]) -> List[dict]:
    """Per-workload rows with occupation normalized to pure DRAM."""
    reports = list(reports)
    dram = {r.workload: r.space_occupation_ratio for r in reports if r.arch == "pure_dram"}
    rows = []
    for r in reports:
        base = dram.get(r.workload)
        rows.append({
            "workload": r.workload,
            "arch": r.arch,
            "space_occupation_ratio": r.space_occupation_ratio,
            "normalized_occupation": normalized_occupation(r.space_occupation_ratio, base) if base else "",
            "bandwidth_bytes_per_cycle": r.bandwidth_bytes_per_cycle,
            "requests_per_kcycle": r.requests_per_kcycle,
            "energy_total_mj": r.total_energy_mj,
        })
    return rows


def emit_figure_csv(reports: Iterable[SimReport]) -> bytes:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=FIGURE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in figure_rows(reports):
        w.writerow(row)
    return buf.getvalue().encode()


def format_table(reports: Iterable[SimReport]) -> str:
    cols = [
        ("workload", "{}"), ("arch", "{}"), ("cycles", "{:d}"), ("writes", "{:d}"),
        ("line_wr", "{:d}"), ("occupation", "{:.6f}"), ("B/cycle", "{:.4f}"), ("energy_mJ", "{:.6g}"),
    ]
    rows = [[c for c, _ in cols]]
    for r in reports:
        vals = [r.workload, r.arch, r.total_cycles, r.write_requests, r.line_writes,
                r.space_occupation_ratio, r.bandwidth_bytes_per_cycle, r.total_energy_mj]
        rows.append([fmt.format(v) for (_, fmt), v in zip(cols, vals)])
    widths = [max(len(row[i]) for row in rows) for i in range(len(cols))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in rows]
    return "\n".join(lines) + "\n"
