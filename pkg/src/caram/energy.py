"""Post-hoc energy accounting from per-device event counts.

Dynamic energy is per line access in pJ; metadata accesses move a single
burst and are charged the line energy scaled by ``metadata_burst_cycles /
burst_cycles_per_line``. Background energy is standby power (mW per GB of
capacity) over each device's idle cycles, plus DRAM refresh power over the
whole run.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Dict, Iterable, List

from caram.memdev import AccessKind, Channel
from caram.traceio.records import LineRequest

GB = 1 << 30


@dataclass(frozen=True)
class DeviceEnergy:
    read_energy_per_line: float  # pJ
    write_energy_per_line: float  # pJ
    activate_energy: float = 0.0  # pJ
    idle_power_per_gb: float = 0.0  # mW
    refresh_power_per_gb: float = 0.0  # mW

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v < 0:
                raise ValueError(f"{k} must be nonnegative")


@dataclass(frozen=True)
class EnergyConstants:
    dram: DeviceEnergy
    pcm: DeviceEnergy
    clock_mhz: float = 400.0
    name: str = "custom"

    def for_class(self, device_class: str) -> DeviceEnergy:
        return self.dram if device_class == "dram" else self.pcm


# Placeholder magnitudes, not taken from any published model; only the
# orderings (PCM idles cheaper, PCM writes dearer) are meant to hold.
DEFAULT_ENERGY = EnergyConstants(
    dram=DeviceEnergy(1.0, 1.0, 0.0, 1.0, 0.5),
    pcm=DeviceEnergy(2.0, 8.0, 0.0, 0.1, 0.0),
    clock_mhz=400.0,
    name="default",
)

ENERGY_PRESETS = {"default": DEFAULT_ENERGY}


COUNT_FIELDS = ("line_reads", "line_writes", "metadata_reads", "metadata_writes", "compare_reads")
_KIND_FIELD = {
    AccessKind.LINE_READ: "line_reads",
    AccessKind.LINE_WRITE: "line_writes",
    AccessKind.METADATA_READ: "metadata_reads",
    AccessKind.METADATA_WRITE: "metadata_writes",
    AccessKind.COMPARE_READ: "compare_reads",
}


@dataclass
class DeviceLedger:
    capacity_bytes: int = 0
    line_reads: int = 0
    line_writes: int = 0
    metadata_reads: int = 0
    metadata_writes: int = 0
    compare_reads: int = 0
    activations: int = 0
    busy_cycles: int = 0
    idle_cycles: int = 0
    metadata_scale: float = 0.25

    def scaled(self, k: int) -> "DeviceLedger":
        return replace(self, **{f: getattr(self, f) * k for f in COUNT_FIELDS + ("activations", "busy_cycles", "idle_cycles")})


@dataclass
class EnergyLedger:
    total_cycles: int = 0
    devices: Dict[str, DeviceLedger] = field(default_factory=dict)

    @classmethod
    def from_channels(cls, total_cycles: int, channels: Dict[str, Iterable[Channel]],
                      capacities: Dict[str, int]) -> "EnergyLedger":
        """Sum the counters of every channel in each device class.

        ``capacities`` gives the bytes billed for standby/refresh power per
        class; busy cycles of channels in one class are summed.
        """
        ledger = cls(total_cycles=total_cycles)
        for dev, chans in channels.items():
            chans = list(chans)
            d = DeviceLedger(capacity_bytes=capacities.get(dev, 0))
            busy = 0
            for ch in chans:
                for kind, name in _KIND_FIELD.items():
                    setattr(d, name, getattr(d, name) + ch.counts[kind])
                d.activations += ch.activations
                busy += ch.busy_cycles
                t = ch.timing
                d.metadata_scale = t.metadata_burst_cycles / t.burst_cycles_per_line
            d.busy_cycles = min(busy, total_cycles)
            d.idle_cycles = total_cycles - d.busy_cycles
            ledger.devices[dev] = d
        return ledger

    @classmethod
    def from_log(cls, total_cycles: int, logs: Dict[str, List], capacities: Dict[str, int],
                 metadata_scale: Dict[str, float] | None = None) -> "EnergyLedger":
        """Rebuild a ledger by replaying recorded :class:`DeviceOp` logs."""
        ledger = cls(total_cycles=total_cycles)
        for dev, ops in logs.items():
            d = DeviceLedger(capacity_bytes=capacities.get(dev, 0))
            if metadata_scale and dev in metadata_scale:
                d.metadata_scale = metadata_scale[dev]
            for op in ops:
                name = _KIND_FIELD[op.kind]
                setattr(d, name, getattr(d, name) + 1)
                d.activations += op.activations
                d.busy_cycles += op.bus_cycles
            d.busy_cycles = min(d.busy_cycles, total_cycles)
            d.idle_cycles = total_cycles - d.busy_cycles
            ledger.devices[dev] = d
        return ledger


def _seconds(cycles, clock_mhz):
    return cycles / (clock_mhz * 1e6)


def total_energy(ledger: EnergyLedger, constants: EnergyConstants) -> Dict[str, object]:
    """Energy per device class and in total, in mJ."""
    out = {}
    grand = 0.0
    for dev in sorted(ledger.devices):
        d = ledger.devices[dev]
        c = constants.for_class(dev)
        dynamic_pj = (
            d.line_reads * c.read_energy_per_line
            + d.compare_reads * c.read_energy_per_line
            + d.line_writes * c.write_energy_per_line
            + d.metadata_reads * c.read_energy_per_line * d.metadata_scale
            + d.metadata_writes * c.write_energy_per_line * d.metadata_scale
            + d.activations * c.activate_energy
        )
        gb = d.capacity_bytes / GB
        # mW * s = mJ
        idle_mj = c.idle_power_per_gb * gb * _seconds(d.idle_cycles, constants.clock_mhz)
        refresh_mj = c.refresh_power_per_gb * gb * _seconds(ledger.total_cycles, constants.clock_mhz)
        dynamic_mj = dynamic_pj * 1e-9
        total = dynamic_mj + idle_mj + refresh_mj
        out[dev] = {"dynamic_mj": dynamic_mj, "idle_mj": idle_mj, "refresh_mj": refresh_mj, "total_mj": total}
        grand += total
    out["total_mj"] = grand
    return out


def stress_mode_transform(trace: Iterable[LineRequest]) -> List[LineRequest]:
    """Remove every idle gap: all requests become ready at the first arrival.

    Order and op mix are kept; the controller's queue then issues each
    request as soon as a slot frees, i.e. back to back.
    """
    out = []
    t0 = None
    for q in trace:
        if t0 is None:
            t0 = q.arrival_cycle
        out.append(q if q.arrival_cycle == t0 else LineRequest(t0, q.lla, q.op, q.lfp, q.payload))
    return out
