"""Experiment configs: which architectures run on which traces.

A config is a YAML mapping (``version: 1``)::

    version: 1
    seed: 7
    timing_preset: table1
    energy_preset: default
    charge_metadata: true
    stress: true
    scale: 0.0625
    architectures: [dram, pcm, hybrid, {preset: caram, queue_depth: 16}]
    workloads:
      - synthetic: mail                 # FIU workload calibration
      - {synthetic: homes, lines: 100000}
      - {name: tiny, synthetic: {total_lines: 5000, unique_fraction: 0.5}}
      - {name: homes-fiu, trace: traces/homes.blkparse.gz, format: fiu}

Every architecture runs on every workload. Relative trace paths resolve
against the config file's directory.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import yaml

from caram.controller import ARCH_PRESETS, ArchitectureConfig, ConfigError, Simulator
from caram.energy import ENERGY_PRESETS, stress_mode_transform
from caram.memdev import TIMING_PRESETS
from caram.metrics import SimReport, emit_csv, emit_figure_csv, emit_report
from caram.traceio import expand_to_lines, generate_synthetic, native, parse_trace
from caram.traceio.synthetic import SpecError, SyntheticTraceSpec
from caram.workloads import WORKLOADS

log = logging.getLogger(__name__)

CONFIG_VERSION = 1
_TOP_KEYS = {"version", "name", "seed", "timing_preset", "energy_preset", "charge_metadata",
             "stress", "scale", "jobs", "architectures", "workloads"}
_TRACE_FORMATS = ("fiu", "native")


@dataclass(frozen=True)
class TraceSource:
    name: str
    kind: str  # "synthetic" or "file"
    synthetic: Optional[SyntheticTraceSpec] = None
    path: Optional[str] = None
    format: str = "native"
    hash_cost: float = 1.0

    def key(self):
        return (self.kind, self.synthetic, self.path, self.format, self.hash_cost)


@dataclass(frozen=True)
class RunSpec:
    arch_name: str
    arch: ArchitectureConfig
    trace: TraceSource
    timing_preset: str
    energy_preset: str
    seed: int
    stress: bool = True

    @property
    def run_id(self) -> str:
        return f"{self.trace.name}__{self.arch_name}"


@dataclass
class ExperimentSpec:
    runs: List[RunSpec] = field(default_factory=list)
    out_dir: Optional[Path] = None
    jobs: int = 1
    name: str = ""


def preset_names() -> List[str]:
    return sorted(p.name[:-5] for p in resources.files("caram.presets").iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str) -> dict:
    path = resources.files("caram.presets") / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError([f"unknown preset {name!r} (available: {', '.join(preset_names())})"])
    return yaml.safe_load(path.read_text())


def load_config(path) -> Tuple[dict, Path]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError([f"config file {p} does not exist"])
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as e:
        raise ConfigError([f"{p}: not valid YAML: {e}"])
    return data, p.parent


def _arch(entry, scale, problems) -> Tuple[str, Optional[ArchitectureConfig]]:
    if isinstance(entry, str):
        entry = {"preset": entry}
    if not isinstance(entry, dict):
        problems.append(f"architecture entry {entry!r} must be a preset name or a mapping")
        return "?", None
    entry = dict(entry)
    name = entry.pop("name", None)
    preset = entry.pop("preset", None)
    try:
        if preset is not None:
            if preset not in ARCH_PRESETS:
                problems.append(f"unknown architecture preset {preset!r}")
                return str(preset), None
            base = ARCH_PRESETS[preset]
            arch = ArchitectureConfig.from_dict({**base.to_dict(), **entry})
        else:
            arch = ArchitectureConfig.from_dict(entry)
    except (ConfigError, TypeError) as e:
        problems.append(str(e))
        return str(name or preset), None
    if scale != 1:
        arch = arch.scaled(scale)
    for p in arch.problems():
        problems.append(f"architecture {name or preset or arch.kind}: {p}")
    return name or preset or arch.kind, arch


def _workload(entry, seed, base_dir, problems) -> Optional[TraceSource]:
    if not isinstance(entry, dict):
        problems.append(f"workload entry {entry!r} must be a mapping")
        return None
    syn = entry.get("synthetic")
    if syn is not None:
        try:
            if isinstance(syn, str):
                if syn not in WORKLOADS:
                    problems.append(f"unknown workload calibration {syn!r} (known: {', '.join(WORKLOADS)})")
                    return None
                spec = WORKLOADS[syn].synthetic_spec(seed, total_lines=entry.get("lines"))
                name = entry.get("name", syn)
            elif isinstance(syn, dict):
                spec = SyntheticTraceSpec(**{"rng_seed": seed, **syn})
                name = entry.get("name")
                if not name:
                    problems.append("a custom synthetic workload needs a 'name'")
                    return None
            else:
                problems.append(f"synthetic must be a workload name or a mapping, not {syn!r}")
                return None
            spec.validate()
        except (SpecError, TypeError) as e:
            problems.append(f"workload {entry.get('name', syn)}: {e}")
            return None
        return TraceSource(name, "synthetic", synthetic=spec)
    path = entry.get("trace")
    if path is None:
        problems.append(f"workload {entry!r} needs 'synthetic' or 'trace'")
        return None
    full = Path(path) if os.path.isabs(path) else base_dir / path
    fmt = entry.get("format", "native")
    if fmt not in _TRACE_FORMATS:
        problems.append(f"trace format must be one of {_TRACE_FORMATS}, not {fmt!r}")
    if not full.is_file():
        problems.append(f"trace file {full} does not exist")
    name = entry.get("name") or full.name.split(".")[0]
    return TraceSource(name, "file", path=str(full), format=fmt, hash_cost=float(entry.get("hash_cost", 1.0)))


def build_experiment(data, base_dir=Path("."), seed=None, timing_preset=None, energy_preset=None,
                     charge_metadata=None, jobs=None) -> ExperimentSpec:
    """Validate a config mapping and expand it into runs; raises ConfigError."""
    problems = []
    if not isinstance(data, dict):
        raise ConfigError(["config must be a mapping"])
    unknown = set(data) - _TOP_KEYS
    if unknown:
        problems.append(f"unknown config keys: {', '.join(sorted(unknown))}")
    if data.get("version") != CONFIG_VERSION:
        problems.append(f"config version must be {CONFIG_VERSION}, got {data.get('version')!r}")
    seed = seed if seed is not None else data.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool):
        problems.append("an explicit integer seed is required (config 'seed' or --seed)")
        seed = 0
    timing = timing_preset or data.get("timing_preset", "table1")
    if timing not in TIMING_PRESETS:
        problems.append(f"unknown timing preset {timing!r}")
    energy = energy_preset or data.get("energy_preset", "default")
    if energy not in ENERGY_PRESETS:
        problems.append(f"unknown energy preset {energy!r}")
    scale = data.get("scale", 1)
    if not isinstance(scale, (int, float)) or not 0 < scale <= 1:
        problems.append(f"scale must be in (0, 1], got {scale!r}")
        scale = 1
    stress = bool(data.get("stress", True))
    charge = data.get("charge_metadata", True) if charge_metadata is None else charge_metadata

    archs = []
    for entry in data.get("architectures") or []:
        name, arch = _arch(entry, scale, problems)
        if arch is not None:
            archs.append((name, replace(arch, charge_metadata=bool(charge))))
    if not data.get("architectures"):
        problems.append("config lists no architectures")
    traces = []
    for entry in data.get("workloads") or []:
        t = _workload(entry, seed, Path(base_dir), problems)
        if t is not None:
            traces.append(t)
    if not data.get("workloads"):
        problems.append("config lists no workloads")
    names = [t.name for t in traces]
    dups = {n for n in names if names.count(n) > 1}
    if dups:
        problems.append(f"duplicate workload names: {', '.join(sorted(dups))}")
    anames = [a for a, _ in archs]
    if len(set(anames)) != len(anames):
        problems.append("architecture names must be unique (add 'name' to repeated presets)")
    if problems:
        raise ConfigError(problems)

    runs = [RunSpec(an, a, t, timing, energy, seed, stress) for t in traces for an, a in archs]
    j = jobs if jobs is not None else data.get("jobs", 1)
    return ExperimentSpec(runs=runs, jobs=max(1, int(j)), name=str(data.get("name", "")))


# -- execution -----------------------------------------------------------

_trace_cache: Dict[tuple, list] = {}


def materialize(src: TraceSource, stress: bool) -> list:
    """Line requests for a trace source; the last one is cached per process."""
    key = (src.key(), stress)
    if key in _trace_cache:
        return _trace_cache[key]
    if src.kind == "synthetic":
        lines = generate_synthetic(src.synthetic)
    elif src.format == "native" and native.peek_kind(src.path) == native.KIND_LINES:
        lines = native.read_lines(src.path)
    else:
        records = parse_trace(src.path, src.format)
        lines = expand_to_lines(records, hash_cost_cycles_per_byte=src.hash_cost)
    if stress:
        lines = stress_mode_transform(lines)
    _trace_cache.clear()
    _trace_cache[key] = lines
    return lines


def execute_run(run: RunSpec) -> SimReport:
    timing = TIMING_PRESETS[run.timing_preset]
    sim = Simulator(run.arch, dram_timing=timing["dram"], pcm_timing=timing["pcm"],
                    energy=ENERGY_PRESETS[run.energy_preset])
    log.info("run %s", run.run_id)
    return sim.run(materialize(run.trace, run.stress), workload=run.trace.name)


def execute(spec: ExperimentSpec) -> List[SimReport]:
    if spec.jobs > 1 and len(spec.runs) > 1:
        import multiprocessing

        with multiprocessing.get_context("spawn").Pool(min(spec.jobs, len(spec.runs))) as pool:
            return pool.map(execute_run, spec.runs, chunksize=1)
    return [execute_run(r) for r in spec.runs]


def write_outputs(spec: ExperimentSpec, reports: List[SimReport], out_dir) -> Path:
    """Per-run JSON reports plus the combined and figure CSVs."""
    out = Path(out_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    for run, rep in zip(spec.runs, reports):
        (out / "runs" / f"{run.run_id}.json").write_bytes(emit_report(rep, "json"))
    (out / "comparison.csv").write_bytes(emit_csv(reports))
    (out / "figures.csv").write_bytes(emit_figure_csv(reports))
    return out
