from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import List

from caram import LINE_SIZE
from caram.dedup.budget import metadata_budget

KINDS = ("pure_dram", "pure_pcm", "hybrid", "caram")
POLICIES = ("lru", "clock")

MiB = 1 << 20
GiB = 1 << 30


class ConfigError(ValueError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        super().__init__("; ".join(problems))
        self.problems = list(problems)


@dataclass(frozen=True)
class ArchitectureConfig:
    kind: str
    dram_bytes: int = 0
    pcm_bytes: int = 0
    write_buffer_bytes: int = 0
    metadata_region_bytes: int = 0
    eviction_policy: str = "lru"
    queue_depth: int = 32
    drain_high_watermark: float = 0.8
    drain_low_watermark: float = 0.2
    hot_epoch_cycles: int = 1_000_000
    hot_write_threshold: int = 2
    swap_out_cycles: int = 10_000
    miss_penalty_cycles: int = 10_000
    metadata_port: str = "shared"
    charge_metadata: bool = True
    flush_at_end: bool = True
    # "bank": consecutive DRAM lines cycle banks, so the buffer and metadata
    # regions spread over all banks; "row" keeps each region in few banks
    dram_address_map: str = "bank"

    @property
    def buffered(self) -> bool:
        return self.kind in ("hybrid", "caram")

    @property
    def capacity_bytes(self) -> int:
        return self.dram_bytes + self.pcm_bytes

    @property
    def usable_bytes(self) -> int:
        """Bytes addressable for data lines (excludes buffer and metadata)."""
        if not self.buffered:
            return self.capacity_bytes
        meta = self.metadata_region_bytes if self.kind == "caram" else 0
        return self.capacity_bytes - self.write_buffer_bytes - meta

    def problems(self) -> List[str]:
        p = []
        if self.kind not in KINDS:
            return [f"unknown architecture kind {self.kind!r} (expected one of {', '.join(KINDS)})"]
        if self.eviction_policy not in POLICIES:
            p.append(f"unknown eviction policy {self.eviction_policy!r}")
        if self.metadata_port not in ("shared", "separate"):
            p.append(f"metadata_port must be 'shared' or 'separate', not {self.metadata_port!r}")
        for name in ("dram_bytes", "pcm_bytes", "write_buffer_bytes", "metadata_region_bytes"):
            v = getattr(self, name)
            if v < 0 or v % LINE_SIZE:
                p.append(f"{name}={v} must be a nonnegative multiple of {LINE_SIZE}")
        if self.dram_address_map not in ("row", "bank"):
            p.append(f"dram_address_map must be 'row' or 'bank', not {self.dram_address_map!r}")
        if self.queue_depth < 1:
            p.append("queue_depth must be >= 1")
        if not 0.0 <= self.drain_low_watermark < self.drain_high_watermark <= 1.0:
            p.append("watermarks must satisfy 0 <= low < high <= 1")
        if self.hot_epoch_cycles < 1 or self.hot_write_threshold < 1:
            p.append("hot-page epoch and threshold must be >= 1")
        if self.swap_out_cycles < 0 or self.miss_penalty_cycles < 0:
            p.append("swap/miss penalties must be >= 0")

        if self.kind == "pure_dram" and (self.dram_bytes <= 0 or self.pcm_bytes):
            p.append("pure_dram needs dram_bytes > 0 and pcm_bytes == 0")
        if self.kind == "pure_pcm" and (self.pcm_bytes <= 0 or self.dram_bytes):
            p.append("pure_pcm needs pcm_bytes > 0 and dram_bytes == 0")
        if self.buffered:
            if self.dram_bytes <= 0 or self.pcm_bytes <= 0:
                p.append(f"{self.kind} needs both dram_bytes and pcm_bytes > 0")
            if self.write_buffer_bytes <= 0:
                p.append(f"{self.kind} needs a write buffer")
            carved = self.write_buffer_bytes + (self.metadata_region_bytes if self.kind == "caram" else 0)
            if carved >= self.dram_bytes:
                p.append(
                    f"write buffer ({self.write_buffer_bytes} B) plus metadata region "
                    f"({self.metadata_region_bytes if self.kind == 'caram' else 0} B) must be smaller "
                    f"than DRAM ({self.dram_bytes} B)"
                )
        elif self.write_buffer_bytes or self.metadata_region_bytes:
            p.append(f"{self.kind} has no write buffer or metadata region")
        if self.kind == "caram" and not p:
            need = metadata_budget(self.usable_bytes).total_bytes
            if self.metadata_region_bytes < need:
                p.append(
                    f"metadata region {self.metadata_region_bytes} B is smaller than the "
                    f"AMT+LFI budget {need} B for {self.usable_bytes} usable bytes"
                )
        return p

    def validate(self) -> "ArchitectureConfig":
        p = self.problems()
        if p:
            raise ConfigError(p)
        return self

    def scaled(self, factor: float) -> "ArchitectureConfig":
        """Shrink every capacity by ``factor`` (rounded down to whole lines)."""

        def s(v):
            return int(v * factor) // LINE_SIZE * LINE_SIZE

        return replace(
            self,
            dram_bytes=s(self.dram_bytes),
            pcm_bytes=s(self.pcm_bytes),
            write_buffer_bytes=s(self.write_buffer_bytes),
            metadata_region_bytes=s(self.metadata_region_bytes),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ArchitectureConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown architecture keys: {', '.join(sorted(unknown))}")
        if "kind" not in d:
            raise ConfigError("architecture needs a 'kind'")
        return cls(**d)


DEFAULT_BUFFER = 256 * MiB


def _caram_metadata(dram, pcm):
    return metadata_budget(dram + pcm).total_bytes


# Equal-cost configurations (DRAM byte price taken as 4x PCM).
ARCH_PRESETS = {
    "dram": ArchitectureConfig("pure_dram", dram_bytes=4 * GiB),
    "pcm": ArchitectureConfig("pure_pcm", pcm_bytes=16 * GiB),
    "hybrid": ArchitectureConfig("hybrid", dram_bytes=2 * GiB, pcm_bytes=8 * GiB, write_buffer_bytes=DEFAULT_BUFFER),
    "caram": ArchitectureConfig(
        "caram", dram_bytes=2 * GiB, pcm_bytes=8 * GiB, write_buffer_bytes=DEFAULT_BUFFER,
        metadata_region_bytes=_caram_metadata(2 * GiB, 8 * GiB),
    ),
}
ARCH_ORDER = ("dram", "pcm", "hybrid", "caram")

# Calibrated workloads model each 4 KiB block as one 256 B line, so the
# whole memory system is shrunk by the same factor to keep buffer and
# capacity proportional to the trace.
CALIBRATION_SCALE = 1 / 16
