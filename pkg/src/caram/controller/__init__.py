from caram.controller.allocator import LineAllocator
from caram.controller.config import (
    ARCH_ORDER,
    ARCH_PRESETS,
    CALIBRATION_SCALE,
    ArchitectureConfig,
    ConfigError,
    GiB,
    MiB,
)
from caram.controller.pagecache import PageCache
from caram.controller.simulator import SimulationError, Simulator, run
from caram.controller.writebuffer import WriteBuffer
