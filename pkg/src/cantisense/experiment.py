"""Experiment specs: YAML parsing, validation, orchestration and CSV output.

A spec is a YAML mapping::

    schema_version: 1
    mode: resonant          # characterize | static | resonant | assay_static | assay_resonant
    duration: 0.3           # simulated sensor time per run, s
    seed: 0
    device: {geometry: {length: 500.0e-6, ...}, material: {...}, quality_factor: 1000}
    bridge: {...}           # BridgeConfig fields
    chain: {...}            # StaticChainConfig fields
    loop: {loop_gain: 3}    # LoopConfig fields; loop_gain sets vga_gain from the critical gain
    counter: {...}          # CounterConfig fields
    assay: {duration: 3600, points: 5, ...}   # AssayConfig fields plus time span and points
    load: {dsigma_s: 5.0e-3, delta_m: 0.0}
    sweep: {parameter: load.delta_m, values: [0, 1.0e-13]}
    output: {decimate: 100}

Every CSV is written atomically, floats use ``repr`` so identical spec and
seed give identical bytes.
"""
from __future__ import annotations

import copy
import csv
import dataclasses
import io
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .assay import AssayConfig, coverage_to_load, equilibrium_coverage, simulate_binding
from .bridge import BridgeConfig
from .counter import CounterConfig
from .errors import Issue, SimulationError, ValidationError
from .mech import (SILICON, CantileverDevice, Geometry, Material, clamp_strain, dynamic_strain_per_meter,
                   mass_loaded_frequency, modal_model, stoney_tip_deflection)
from .resonant_loop import LoopConfig, critical_vga_gain, run_oscillator
from .static_chain import ChainState, StaticChainConfig, calibrate_offset, process_block, select_channel

SCHEMA_VERSION = 1
MODES = ("characterize", "static", "resonant", "assay_static", "assay_resonant")
REQUIRED = {
    "characterize": ("device",),
    "static": ("device", "bridge", "chain"),
    "resonant": ("device", "bridge", "loop"),
    "assay_static": ("device", "bridge", "chain", "assay"),
    "assay_resonant": ("device", "bridge", "loop", "assay"),
}
DEFAULT_DURATION = {"characterize": 0.0, "static": 0.1, "resonant": 0.3,
                    "assay_static": 0.05, "assay_resonant": 0.3}
STRING_FIELDS = {"resistor_kind", "mode", "limiter_mode", "counter_tap"}
TOP_KEYS = {"schema_version", "mode", "duration", "seed", "device", "bridge", "chain", "loop",
            "counter", "assay", "load", "sweep", "output"}


@dataclass(frozen=True)
class Load:
    dsigma_s: float = 0.0
    delta_m: float = 0.0


@dataclass(frozen=True)
class Sweep:
    parameter: str
    values: tuple


@dataclass(frozen=True)
class ExperimentSpec:
    mode: str
    device: CantileverDevice
    duration: float
    seed: int = 0
    bridge: BridgeConfig = field(default_factory=BridgeConfig)
    chain: StaticChainConfig = field(default_factory=StaticChainConfig)
    loop: LoopConfig = field(default_factory=LoopConfig)
    loop_gain: float | None = None
    counter: CounterConfig = field(default_factory=CounterConfig)
    assay: AssayConfig = field(default_factory=AssayConfig)
    assay_duration: float = 3600.0
    assay_points: int = 5
    load: Load = field(default_factory=Load)
    sweep: Sweep | None = None
    decimate: int = 1
    raw: dict = field(default_factory=dict, compare=False, repr=False)


def _normalize_mode(mode: Any) -> str:
    return str(mode).strip().lower().replace("-", "_").replace("assaystatic", "assay_static") \
        .replace("assayresonant", "assay_resonant")


def _coerce(key: str, value: Any) -> Any:
    # YAML 1.1 reads 500e-6 (no dot) as a string
    if isinstance(value, str) and key not in STRING_FIELDS:
        try:
            return float(value)
        except ValueError:
            return value
    if isinstance(value, list):
        return [_coerce(key, v) for v in value]
    return value


def _build(cls, raw: Any, path: str, issues: list[Issue], extra: tuple = ()):
    """Construct dataclass ``cls`` from a mapping, recording issues under ``path``."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        issues.append(Issue(path, raw, "a mapping"))
        return None
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key in extra:
            continue
        if key not in names:
            issues.append(Issue(f"{path}.{key}", value, f"a known field of {path} ({', '.join(sorted(names))})"))
            continue
        value = _coerce(key, value)
        if key not in STRING_FIELDS and not (
                value is None or isinstance(value, (int, float)) and not isinstance(value, bool)
                or isinstance(value, list) and all(isinstance(v, (int, float)) for v in value)):
            issues.append(Issue(f"{path}.{key}", value, "a number"))
            continue
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ValidationError as e:
        issues.extend(e.prefixed(path).issues)
    except TypeError as e:
        issues.append(Issue(path, raw, str(e)))
    return None


def _build_device(raw: Any, issues: list[Issue]) -> CantileverDevice | None:
    if not isinstance(raw, dict):
        issues.append(Issue("device", raw, "a mapping"))
        return None
    n_before = len(issues)
    geom = None
    if "geometry" in raw:
        geom = _build(Geometry, raw["geometry"], "device.geometry", issues)
    else:
        issues.append(Issue("device.geometry", None, "present"))
    mat = _build(Material, raw["material"], "device.material", issues) if "material" in raw else SILICON
    kwargs = {}
    for key, value in raw.items():
        if key in ("geometry", "material"):
            continue
        if key not in ("quality_factor", "mass_placement"):
            issues.append(Issue(f"device.{key}", value, "a known field of device "
                                "(geometry, material, quality_factor, mass_placement)"))
            continue
        value = _coerce(key, value)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            issues.append(Issue(f"device.{key}", value, "a number"))
            continue
        kwargs[key] = float(value)
    if len(issues) > n_before:
        return None
    try:
        return CantileverDevice(geom, mat, **kwargs)
    except ValidationError as e:
        issues.extend(e.prefixed("device").issues)
        return None


def parse_spec(raw: Any, mode: str | None = None) -> ExperimentSpec:
    """Validate a decoded config mapping; raises :class:`ValidationError` with every issue."""
    issues: list[Issue] = []
    if not isinstance(raw, dict):
        raise ValidationError([Issue("<root>", raw, "a mapping of sections")])
    raw = copy.deepcopy(raw)
    for key in raw:
        if key not in TOP_KEYS:
            issues.append(Issue(key, raw[key], f"a known top-level key ({', '.join(sorted(TOP_KEYS))})"))
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        issues.append(Issue("schema_version", version, f"== {SCHEMA_VERSION}"))
    mode = _normalize_mode(mode if mode is not None else raw.get("mode", ""))
    if mode not in MODES:
        issues.append(Issue("mode", raw.get("mode"), f"one of {MODES}"))
        raise ValidationError(issues)
    for section in REQUIRED[mode]:
        if section not in raw:
            issues.append(Issue(section, None, f"section '{section}' present for mode {mode}"))

    duration = _coerce("duration", raw.get("duration", DEFAULT_DURATION[mode]))
    if not isinstance(duration, (int, float)) or not duration >= 0:
        issues.append(Issue("duration", duration, ">= 0"))
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        issues.append(Issue("seed", seed, "a non-negative integer"))

    device = _build_device(raw["device"], issues) if "device" in raw else None
    bridge = _build(BridgeConfig, raw.get("bridge"), "bridge", issues) or BridgeConfig()
    chain = _build(StaticChainConfig, raw.get("chain"), "chain", issues) or StaticChainConfig()
    loop_raw = dict(raw.get("loop") or {}) if isinstance(raw.get("loop") or {}, dict) else raw.get("loop")
    loop_gain = None
    if isinstance(loop_raw, dict) and "loop_gain" in loop_raw:
        loop_gain = _coerce("loop_gain", loop_raw.pop("loop_gain"))
        if not isinstance(loop_gain, (int, float)) or not loop_gain >= 0:
            issues.append(Issue("loop.loop_gain", loop_gain, ">= 0"))
    loop = _build(LoopConfig, loop_raw, "loop", issues) or LoopConfig()
    counter = _build(CounterConfig, raw.get("counter"), "counter", issues) or CounterConfig()
    assay_raw = raw.get("assay") or {}
    assay = _build(AssayConfig, assay_raw, "assay", issues, extra=("duration", "points")) or AssayConfig()
    assay_duration = _coerce("duration", assay_raw.get("duration", 3600.0)) if isinstance(assay_raw, dict) else 0
    assay_points = assay_raw.get("points", 5) if isinstance(assay_raw, dict) else 0
    if mode.startswith("assay"):
        if not isinstance(assay_duration, (int, float)) or not assay_duration > 0:
            issues.append(Issue("assay.duration", assay_duration, "> 0"))
        if not isinstance(assay_points, int) or assay_points < 2:
            issues.append(Issue("assay.points", assay_points, "an integer >= 2"))
    load = _build(Load, raw.get("load"), "load", issues) or Load()

    if device is not None and mode in ("resonant", "assay_resonant") and "loop" in raw:
        f0 = modal_model(device).natural_frequency
        issues.extend(i._replace(path=f"loop.{i.path}") for i in loop.check(f0))
        if isinstance(duration, (int, float)) and duration < 100 / f0:
            issues.append(Issue("duration", duration, f">= 100/f0 ({100 / f0:.6g} s)"))
    if mode in ("static", "assay_static") and isinstance(duration, (int, float)) and duration <= 0:
        issues.append(Issue("duration", duration, "> 0"))

    sweep = None
    if "sweep" in raw:
        sw = raw["sweep"]
        if not isinstance(sw, dict) or "parameter" not in sw or "values" not in sw:
            issues.append(Issue("sweep", sw, "a mapping with 'parameter' and 'values'"))
        else:
            values = _coerce("values", sw["values"])
            if not resolves_numeric(str(sw["parameter"])):
                issues.append(Issue("sweep.parameter", sw["parameter"], "a path to a numeric field"))
            if not isinstance(values, list) or not values or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
                issues.append(Issue("sweep.values", sw["values"], "a non-empty list of numbers"))
            else:
                sweep = Sweep(str(sw["parameter"]), tuple(values))
    out = raw.get("output") or {}
    decimate = out.get("decimate", 1) if isinstance(out, dict) else None
    if not isinstance(decimate, int) or decimate < 1:
        issues.append(Issue("output.decimate", decimate, "an integer >= 1"))

    if issues:
        raise ValidationError(issues)
    return ExperimentSpec(mode=mode, device=device, duration=float(duration), seed=seed, bridge=bridge,
                          chain=chain, loop=loop, loop_gain=loop_gain, counter=counter, assay=assay,
                          assay_duration=float(assay_duration), assay_points=int(assay_points), load=load,
                          sweep=sweep, decimate=decimate, raw=raw)


NUMERIC_SECTIONS = {
    "device.geometry": Geometry, "device.material": Material, "bridge": BridgeConfig,
    "chain": StaticChainConfig, "loop": LoopConfig, "counter": CounterConfig,
    "assay": AssayConfig, "load": Load,
}
EXTRA_NUMERIC = {"device.quality_factor", "device.mass_placement", "loop.loop_gain", "assay.duration",
                 "assay.points", "duration"}


def resolves_numeric(path: str) -> bool:
    """True if a sweep may set the dotted ``path`` to a number."""
    if path in EXTRA_NUMERIC:
        return True
    section, _, name = path.rpartition(".")
    cls = NUMERIC_SECTIONS.get(section)
    if cls is None or name in STRING_FIELDS or name == "hpf_cutoffs":
        return False
    return name in {f.name for f in dataclasses.fields(cls)}


def with_value(raw: dict, path: str, value: float) -> dict:
    """Copy of ``raw`` with the dotted ``path`` set to ``value``."""
    out = copy.deepcopy(raw)
    node = out
    *parents, last = path.split(".")
    for key in parents:
        node = node.setdefault(key, {})
    node[last] = value
    return out


def validate_spec(text: str, mode: str | None = None) -> ExperimentSpec:
    """Parse YAML text into a validated spec."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ValidationError([Issue("<yaml>", None, f"parseable YAML ({e})")]) from None
    return parse_spec(raw, mode)


def load_spec(path: str | os.PathLike, mode: str | None = None) -> ExperimentSpec:
    return validate_spec(Path(path).read_text(), mode)


def default_config(mode: str = "resonant") -> dict:
    """A complete, valid config mapping for ``mode`` on the reference device."""
    mode = _normalize_mode(mode)
    if mode not in MODES:
        raise ValidationError([Issue("mode", mode, f"one of {MODES}")])
    cfg = {
        "schema_version": SCHEMA_VERSION,
        "mode": mode,
        "duration": DEFAULT_DURATION[mode],
        "seed": 0,
        "device": {
            "geometry": {"length": 500e-6, "width": 100e-6, "thickness": 5e-6},
            "material": {"youngs_modulus": 169e9, "density": 2330.0, "poisson_ratio": 0.25},
            "quality_factor": 1000.0,
            "mass_placement": 1.0,
        },
        "bridge": {"bias_voltage": 5.0, "gauge_factor": 100.0, "active_fraction": 0.5,
                   "resistor_kind": "pmos_linear", "white_noise_density": 1e-16},
        "load": {"dsigma_s": 5e-3, "delta_m": 0.0},
        "output": {"decimate": 10},
    }
    if mode in ("static", "assay_static"):
        cfg["chain"] = {"chop_frequency": 10e3, "first_stage_gain": 100.0, "input_offset": 1e-3,
                        "chop_suppression_db": 40.0, "lpf_cutoff": 100.0, "dac_bits": 16,
                        "dac_full_scale": 0.05, "gain2": math.sqrt(10), "gain3": math.sqrt(10)}
    if mode in ("resonant", "assay_resonant"):
        cfg["loop"] = {"loop_gain": 3.0, "dda_gain": 100.0, "limiter_level": 1e-3,
                       "buffer_current_limit": 5e-3, "coil_resistance": 50.0,
                       "coil_length": 1e-3, "field": 0.1}
        cfg["counter"] = {"gate_time": 0.1, "mode": "reciprocal", "hysteresis": 0.0}
        cfg["output"]["decimate"] = 100
    if mode.startswith("assay"):
        cfg["assay"] = {"k_on": 1e5, "k_off": 1e-4, "concentration": 10e-9, "site_density": 1e16,
                        "molecule_mass": 2.5e-22, "max_surface_stress": 5e-3, "active_area": 5e-8,
                        "duration": 3600.0, "points": 5 if mode == "assay_resonant" else 20}
    return cfg


def default_spec_text(mode: str = "resonant") -> str:
    return yaml.safe_dump(default_config(mode), sort_keys=False)


# ---------------------------------------------------------------- running


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    """Write a CSV atomically (temp file in the same directory, then rename)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)


def _columns(table: dict[str, np.ndarray], step: int = 1):
    keys = list(table)
    cols = [np.asarray(table[k])[::step] for k in keys]
    return keys, zip(*cols)


def characterize(device: CantileverDevice, bridge: BridgeConfig) -> dict:
    g, m = device.geometry, device.material
    modal = modal_model(device)
    unit_stress_strain = clamp_strain(g, m, dsigma_s=1.0)
    return {
        "spring_constant_n_per_m": modal.spring_constant,
        "effective_mass_kg": modal.effective_mass,
        "natural_frequency_hz": modal.natural_frequency,
        "quality_factor": modal.quality_factor,
        "mass_responsivity_hz_per_kg": -modal.natural_frequency / (2 * modal.effective_mass),
        "stoney_responsivity_m_per_n_per_m": stoney_tip_deflection(g, m, 1.0),
        "static_strain_per_n_per_m": unit_stress_strain,
        "dynamic_strain_per_m": dynamic_strain_per_meter(g),
        "bridge_sensitivity_v_per_strain": bridge.sensitivity,
        "static_bridge_v_per_n_per_m": bridge.sensitivity * unit_stress_strain,
        "dynamic_bridge_v_per_m": bridge.sensitivity * dynamic_strain_per_meter(g),
    }


def _loop_for(spec: ExperimentSpec) -> LoopConfig:
    if spec.loop_gain is None:
        return spec.loop
    modal = modal_model(spec.device)
    crit = critical_vga_gain(spec.device, modal, spec.bridge, spec.loop)
    return dataclasses.replace(spec.loop, vga_gain=spec.loop_gain * crit)


def _static_run(spec: ExperimentSpec, dsigma_s: np.ndarray, seed_seq) -> tuple[np.ndarray, np.ndarray, int]:
    """Calibrated chain response to per-sample stress; returns (bridge_v, output, dac_code)."""
    from .bridge import bridge_output, noise_components

    cfg = spec.chain
    fs = cfg.sample_rate
    cal_seq, run_seq = seed_seq.spawn(2)

    def quiet(n):
        w, fl = noise_components(spec.bridge, 1 / fs, n, cal_seq)
        return np.zeros(n), w, fl

    state = ChainState.initial(cfg)
    state = dataclasses.replace(state, dac_code=calibrate_offset(state, cfg, quiet))
    strain = clamp_strain(spec.device.geometry, spec.device.material, dsigma_s=dsigma_s)
    vb = bridge_output(spec.bridge, strain)
    white, flicker = noise_components(spec.bridge, 1 / fs, vb.size, run_seq)
    _, out = process_block(select_channel(state, state.selected_channel), cfg, vb, white, flicker)
    return vb, out, state.dac_code


def run_static_mode(spec: ExperimentSpec, out_dir: Path) -> dict:
    cfg = spec.chain
    fs = cfg.sample_rate
    n = max(1, int(round(spec.duration * fs)))
    vb, out, code = _static_run(spec, np.full(n, spec.load.dsigma_s), np.random.SeedSequence(spec.seed))
    settle = cfg.settle_samples()
    tail = out[settle:] if settle < n else out[n // 2:]
    strain = clamp_strain(spec.device.geometry, spec.device.material, dsigma_s=spec.load.dsigma_s)
    expected = spec.bridge.sensitivity * strain * cfg.total_gain
    t = np.arange(n) / fs
    keys, rows = _columns({"time_s": t, "bridge_voltage_v": vb, "output_v": out}, spec.decimate)
    write_csv(out_dir / "trace.csv", keys, rows)
    return {"dsigma_s_n_per_m": spec.load.dsigma_s, "dac_code": code,
            "settled_output_v": float(np.mean(tail)), "expected_output_v": expected}


def run_resonant_mode(spec: ExperimentSpec, out_dir: Path) -> dict:
    modal = modal_model(spec.device)
    loop = _loop_for(spec)
    dm = spec.load.delta_m
    trace = run_oscillator(spec.device, modal, spec.bridge, loop, spec.duration, spec.seed,
                           counter=spec.counter, delta_m=dm, decimate=spec.decimate)
    keys, rows = _columns({"time_s": trace.time, "tip_displacement_m": trace.tip_displacement,
                           "bridge_voltage_v": trace.bridge_voltage, "coil_current_a": trace.coil_current})
    write_csv(out_dir / "trace.csv", keys, rows)
    return {"delta_m_kg": dm, "natural_frequency_hz": modal.natural_frequency,
            "expected_frequency_hz": mass_loaded_frequency(modal, dm), "vga_gain": loop.vga_gain,
            "settled": trace.settled, "startup_time_s": trace.startup_time,
            "settled_amplitude_m": trace.settled_amplitude, "frequency_hz": trace.settled_frequency,
            "counter_count": trace.counter_count}


def run_assay_mode(spec: ExperimentSpec, out_dir: Path) -> dict:
    """Binding curve with the sensor evaluated quasi-statically at each time point.

    Binding evolves over seconds to hours, the sensor over milliseconds, so at
    each sampled coverage the sensor is simulated for ``spec.duration`` with
    the load frozen.
    """
    t, theta = simulate_binding(spec.assay, spec.assay_duration, spec.assay_points)
    dm, ds = coverage_to_load(theta, spec.assay)
    dm_tip = dm * spec.device.mass_placement
    seqs = np.random.SeedSequence(spec.seed).spawn(len(t))
    table = {"time_s": t, "coverage": theta, "delta_m_kg": dm, "dsigma_s_n_per_m": ds}
    if spec.mode == "assay_static":
        cfg = spec.chain
        n = max(1, int(round(spec.duration * cfg.sample_rate)))
        settle = cfg.settle_samples()
        outs = []
        for sigma, seq in zip(ds, seqs):
            _, out, _ = _static_run(spec, np.full(n, sigma), seq)
            outs.append(float(np.mean(out[settle:] if settle < n else out[n // 2:])))
        table["output_v"] = np.array(outs)
    else:
        modal = modal_model(spec.device)
        loop = _loop_for(spec)
        freqs = []
        for m_add, seq in zip(dm_tip, seqs):
            tr = run_oscillator(spec.device, modal, spec.bridge, loop, spec.duration,
                                int(seq.generate_state(1)[0]), counter=spec.counter, delta_m=float(m_add))
            freqs.append(tr.settled_frequency)
        table["frequency_hz"] = np.array(freqs)
        table["expected_frequency_hz"] = np.array([mass_loaded_frequency(modal, m) for m in dm_tip])
    keys, rows = _columns(table)
    write_csv(out_dir / "trace.csv", keys, rows)
    summary = {"equilibrium_coverage": equilibrium_coverage(spec.assay), "final_coverage": theta[-1],
               "final_delta_m_kg": dm[-1], "final_dsigma_s_n_per_m": ds[-1]}
    last = "output_v" if spec.mode == "assay_static" else "frequency_hz"
    summary[f"final_{last}"] = table[last][-1]
    return summary


def run_single(spec: ExperimentSpec, out_dir: str | os.PathLike) -> dict:
    """Run one spec (no sweep); writes ``trace.csv`` (if any) and ``summary.csv``."""
    out_dir = Path(out_dir)
    if spec.mode == "characterize":
        summary = characterize(spec.device, spec.bridge)
    elif spec.mode == "static":
        summary = run_static_mode(spec, out_dir)
    elif spec.mode == "resonant":
        summary = run_resonant_mode(spec, out_dir)
    else:
        summary = run_assay_mode(spec, out_dir)
    write_csv(out_dir / "summary.csv", list(summary), [list(summary.values())])
    return summary


def _sweep_point(args) -> tuple[str, dict]:
    raw, mode, param, value, point_dir = args
    spec = parse_spec(with_value(raw, param, value), mode)
    try:
        return "ok", run_single(dataclasses.replace(spec, sweep=None), point_dir)
    except SimulationError as e:
        return f"{type(e).__name__}: {e}", {}


def run_experiment(spec: ExperimentSpec, out_dir: str | os.PathLike, workers: int = 1) -> list[dict]:
    """Run a spec, or each point of its sweep.

    Sweep points go to ``point_NNN/`` and one row each to ``sweep_summary.csv``.
    Failing points are recorded with their diagnostic in the ``status``
    column; :class:`SimulationError` is re-raised after all points finish.
    For a plain run the simulation error propagates directly.
    """
    out_dir = Path(out_dir)
    if spec.sweep is None:
        return [run_single(spec, out_dir)]
    raw = {k: v for k, v in spec.raw.items() if k != "sweep"}
    jobs = [(raw, spec.mode, spec.sweep.parameter, v, out_dir / f"point_{i:03d}")
            for i, v in enumerate(spec.sweep.values)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    keys: list[str] = []
    for _, s in results:
        keys += [k for k in s if k not in keys]
    header = [spec.sweep.parameter, "status"] + keys
    rows = [[v, status] + [s.get(k, "") for k in keys] for v, (status, s) in zip(spec.sweep.values, results)]
    write_csv(out_dir / "sweep_summary.csv", header, rows)
    failed = [status for status, _ in results if status != "ok"]
    if failed:
        raise SimulationError(f"{len(failed)} of {len(results)} sweep points failed: {failed[0]}")
    return [s for _, s in results]
