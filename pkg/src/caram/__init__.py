"""Trace-driven simulator of a content-aware hybrid PCM/DRAM main memory."""

__version__ = "0.1.0"

LINE_SIZE = 256
BLOCK_SIZE = 4096
LINES_PER_BLOCK = BLOCK_SIZE // LINE_SIZE
