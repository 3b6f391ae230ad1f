from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from caram import LINES_PER_BLOCK


class Op(enum.IntEnum):
    READ = 0
    WRITE = 1

    @classmethod
    def parse(cls, text: str) -> "Op":
        t = text.strip().lower()
        if t in ("r", "read"):
            return cls.READ
        if t in ("w", "write"):
            return cls.WRITE
        raise ValueError(f"unknown op {text!r}")

    def __str__(self):
        return self.name.lower()


class TraceFormatError(ValueError):
    """Too many malformed records, or a structurally broken trace file."""

    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


@dataclass(frozen=True, slots=True)
class TraceRecord:
    """One 4 KiB block access from a block I/O trace."""

    timestamp: int
    device_id: int
    block_lba: int
    block_count: int
    op: Op
    block_hash: int

    def __post_init__(self):
        if self.block_count < 1:
            raise ValueError("block_count must be >= 1")
        if not isinstance(self.op, Op):
            raise ValueError(f"op must be an Op, got {self.op!r}")


@dataclass(frozen=True, slots=True)
class LineRequest:
    """A single 256-byte line read or write arriving at the memory controller."""

    arrival_cycle: int
    lla: int
    op: Op
    lfp: int
    payload: Optional[bytes] = None

    @property
    def page(self) -> int:
        return self.lla // LINES_PER_BLOCK
