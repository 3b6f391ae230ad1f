from caram.dedup.budget import AMT_ENTRY_BYTES, LFI_ENTRY_BYTES, MetadataBudget, metadata_budget
from caram.dedup.engine import (
    AMT,
    LFI,
    CapacityError,
    ContractError,
    DedupEngine,
    DedupOutcome,
    DedupStats,
    LfiEntry,
    MemOp,
    Outcome,
    ReadResult,
    SimpleAllocator,
)
from caram.dedup.snapshot import restore, snapshot
