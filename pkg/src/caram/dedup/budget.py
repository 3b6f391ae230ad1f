from __future__ import annotations

from dataclasses import dataclass

from caram import LINE_SIZE

AMT_ENTRY_BYTES = 8   # 4B LLA + 4B PLA
LFI_ENTRY_BYTES = 10  # 4B fingerprint + 4B PLA + 2B refcount


@dataclass(frozen=True)
class MetadataBudget:
    memory_capacity_bytes: int
    line_size_bytes: int
    amt_bytes: int
    lfi_bytes: int

    @property
    def total_bytes(self) -> int:
        return self.amt_bytes + self.lfi_bytes


def metadata_budget(capacity_bytes: int) -> MetadataBudget:
    """Worst-case AMT and LFI sizes for a memory of ``capacity_bytes``."""
    if capacity_bytes <= 0 or capacity_bytes % LINE_SIZE:
        raise ValueError(f"capacity {capacity_bytes} is not a positive multiple of {LINE_SIZE}")
    lines = capacity_bytes // LINE_SIZE
    return MetadataBudget(capacity_bytes, LINE_SIZE, lines * AMT_ENTRY_BYTES, lines * LFI_ENTRY_BYTES)
