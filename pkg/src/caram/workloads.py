"""Synthetic stand-ins for the four FIU workloads.

Counts are the per-day block totals of the FIU mail, web-vm, homes and
web-users volumes. A calibrated trace treats each counted block as one
line request, keeps the unique/total write ratio and the read share, and
spreads writes over a line address space the size of the volume.
"""

from __future__ import annotations

from dataclasses import dataclass

from caram.traceio.synthetic import SyntheticTraceSpec

GIB = 1 << 30


@dataclass(frozen=True)
class Workload:
    name: str
    volume_gb: int
    read_total: int
    read_unique: int
    write_total: int
    write_unique: int

    @property
    def unique_write_ratio(self) -> float:
        return self.write_unique / self.write_total

    @property
    def read_fraction(self) -> float:
        return self.read_total / (self.read_total + self.write_total)

    def synthetic_spec(self, seed: int, total_lines: int | None = None, gap_cycles: int = 0) -> SyntheticTraceSpec:
        total = total_lines if total_lines is not None else self.read_total + self.write_total
        return SyntheticTraceSpec(
            total_lines=total,
            unique_fraction=self.unique_write_ratio,
            read_fraction=self.read_fraction,
            address_space_lines=min(self.volume_gb * GIB // 256, 1 << 32),
            rng_seed=seed,
            gap_cycles=gap_cycles,
        )


WORKLOADS = {
    w.name: w
    for w in (
        Workload("mail", 500, 157012, 26366, 212253, 108664),
        Workload("web-vm", 70, 42679, 1341, 383539, 146491),
        Workload("homes", 470, 7368, 850, 389559, 243040),
        Workload("web-users", 10, 6042, 143, 245662, 172125),
    )
}
