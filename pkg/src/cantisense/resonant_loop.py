"""Closed-loop simulation of the resonant (mass-sensing) mode.

Per sample at rate ``fs``::

    z -> clamp strain -> bridge (+ noise, + disturbance) -> DDA gain
      -> HPF cascade -> quadrature all-pass -> VGA -> limiter
      -> class-AB buffer (current clamp) -> coil current -> Lorentz force
      -> one RK4 step of the cantilever -> z

The bridge senses displacement while the force must lead it by 90 degrees
at resonance, so a first-order all-pass tuned to the unloaded resonance
supplies that lead. Every analog block is an ideal discrete-time model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numba
import numpy as np
from scipy import optimize

from . import filters
from .bridge import MAX_STRAIN, BridgeConfig, noise_components
from .counter import CounterConfig, measure_frequency
from .errors import Checker, Issue, NoOscillationError, NotSettledError, SimulationError, ValidationError
from .filters import hpf_step  # noqa: F401  (re-exported loop block)
from .mech import CantileverDevice, ModalModel, _rk4, dynamic_strain_per_meter

KICK_DISPLACEMENT = 1e-12
OSCILLATION_FACTOR = 10.0
TAPS = ("hpf", "bridge", "displacement", "coil")


@dataclass(frozen=True)
class LoopConfig:
    """Feedback-loop parameters.

    ``hpf_cutoffs=None`` means two sections at f0/100; an empty tuple bypasses
    the cascade. ``sample_rate=None`` means 100*f0 and ``phase_center=None``
    centres the all-pass on f0. ``limiter_level=inf`` removes the limiter.
    ``counter_tap`` picks the node the counter watches; ``"hpf"`` (the HPF
    cascade output) is free of DC drift, which would stall a zero-referenced
    comparator on the raw ``"bridge"`` node.
    """

    dda_gain: float = 100.0
    hpf_cutoffs: Sequence[float] | None = None
    vga_gain: float = 0.01
    limiter_level: float = 1e-3
    limiter_mode: str = "tanh"
    buffer_current_limit: float = 5e-3
    coil_resistance: float = 50.0
    coil_length: float = 1e-3
    field: float = 0.1
    sample_rate: float | None = None
    phase_center: float | None = None
    counter_tap: str = "hpf"

    def __post_init__(self):
        if self.hpf_cutoffs is not None:
            object.__setattr__(self, "hpf_cutoffs", tuple(float(c) for c in self.hpf_cutoffs))
        c = Checker()
        for name in ("dda_gain", "limiter_level", "buffer_current_limit",
                     "coil_resistance", "coil_length", "field"):
            c.require(getattr(self, name) > 0, name, getattr(self, name), "> 0")
        c.require(self.vga_gain >= 0, "vga_gain", self.vga_gain, ">= 0")
        c.require(self.limiter_mode in ("tanh", "hard"), "limiter_mode", self.limiter_mode, "'tanh' or 'hard'")
        c.require(self.counter_tap in TAPS, "counter_tap", self.counter_tap, f"one of {TAPS}")
        c.done()

    def check(self, f0: float) -> list[Issue]:
        """Invariants that depend on the resonance frequency."""
        c = Checker()
        for i, fc in enumerate(self.hpf_cutoffs or ()):
            c.require(0 < fc < f0 / 10, f"hpf_cutoffs[{i}]", fc, f"0 < hpf_cutoff < f0/10 ({f0 / 10:.6g} Hz)")
        if self.sample_rate is not None:
            c.require(self.sample_rate >= 100 * f0, "sample_rate", self.sample_rate,
                      f"fs >= 100*f0 ({100 * f0:.6g} Hz)")
        if self.phase_center is not None:
            fs = self.sample_rate or 100 * f0
            c.require(0 < self.phase_center < fs / 2, "phase_center", self.phase_center, "0 < x < fs/2")
        return c.issues

    def resolve(self, f0: float) -> "LoopConfig":
        """Fill defaults that depend on f0 and validate."""
        issues = self.check(f0)
        if issues:
            raise ValidationError(issues)
        return replace(
            self,
            hpf_cutoffs=(f0 / 100, f0 / 100) if self.hpf_cutoffs is None else self.hpf_cutoffs,
            sample_rate=100 * f0 if self.sample_rate is None else self.sample_rate,
            phase_center=f0 if self.phase_center is None else self.phase_center,
        )


def lorentz_force(current, field: float, length: float):
    return field * current * length


def limiter(x, level: float):
    """Smooth amplitude limiter ``level * tanh(x / level)``."""
    if not level > 0:
        raise ValidationError(f"limiter level must be > 0, got {level}")
    if math.isinf(level):
        return x
    return level * np.tanh(np.asarray(x) / level) if np.ndim(x) else level * math.tanh(x / level)


def buffer_drive(v, cfg: LoopConfig):
    """Coil current from the buffer input voltage, clamped at the current limit."""
    i = np.clip(np.asarray(v, dtype=float) / cfg.coil_resistance,
                -cfg.buffer_current_limit, cfg.buffer_current_limit)
    return float(i) if i.ndim == 0 else i


def loop_gain(device: CantileverDevice, modal: ModalModel, bridge: BridgeConfig,
              loop: LoopConfig, f):
    """Complex small-signal open-loop gain at frequency ``f`` (limiter slope 1)."""
    cfg = loop.resolve(modal.natural_frequency)
    fs = cfg.sample_rate
    f = np.asarray(f, dtype=float)
    w = 2 * np.pi * f
    g = bridge.sensitivity * dynamic_strain_per_meter(device.geometry) * cfg.dda_gain
    for c in cfg.hpf_cutoffs:
        g = g * filters.highpass(c, fs).response(f, fs)
    g = g * filters.allpass(cfg.phase_center, fs).response(f, fs)
    g = g * cfg.vga_gain / cfg.coil_resistance * cfg.field * cfg.coil_length
    return g / (modal.spring_constant - modal.effective_mass * w**2 + 1j * w * modal.damping)


def oscillation_frequency(device, modal, bridge, loop) -> float:
    """Frequency where the small-signal loop phase is zero."""
    f0 = modal.natural_frequency
    probe = replace(loop, vga_gain=1.0)
    return optimize.brentq(lambda f: np.angle(loop_gain(device, modal, bridge, probe, f)),
                           0.9 * f0, 1.1 * f0, xtol=1e-9 * f0)


def critical_vga_gain(device, modal, bridge, loop) -> float:
    """VGA setting that puts the small-signal loop gain at exactly 1."""
    probe = replace(loop, vga_gain=1.0)
    f_osc = oscillation_frequency(device, modal, bridge, loop)
    return 1 / abs(loop_gain(device, modal, bridge, probe, f_osc))


@numba.njit(cache=True)
def _loop_kernel(n, z, v, k, m, c, dt, strain_per_m, sens, noise, disturb, dda,
                 hb0, hb1, ha1, ab0, ab1, aa1, vga, vlim, hard, r_coil, i_max, bl):
    zs = np.empty(n)
    vs = np.empty(n)
    vbs = np.empty(n)
    cur = np.empty(n)
    hpo = np.empty(n)
    n_hpf = hb0.shape[0]
    hstate = np.zeros(n_hpf)
    astate = 0.0
    for i in range(n):
        vb = sens * strain_per_m * z + noise[i] + disturb[i]
        x = dda * vb
        for j in range(n_hpf):
            y = hb0[j] * x + hstate[j]
            hstate[j] = hb1[j] * x - ha1[j] * y
            x = y
        hpo[i] = x
        y = ab0 * x + astate
        astate = ab1 * x - aa1 * y
        x = vga * y
        if vlim < np.inf:
            if hard:
                x = min(max(x, -vlim), vlim)
            else:
                x = vlim * np.tanh(x / vlim)
        current = min(max(x / r_coil, -i_max), i_max)
        zs[i] = z
        vs[i] = v
        vbs[i] = vb
        cur[i] = current
        z, v = _rk4(z, v, bl * current, k, m, c, dt)
    return zs, vs, vbs, cur, hpo


class Settling(NamedTuple):
    settled: bool
    amplitude: float
    time: float


def cycle_peak_to_peak(signal, fs: float):
    """Peak-to-peak value and start time of each rising-zero-crossing cycle."""
    x = np.asarray(signal, dtype=float)
    idx = np.flatnonzero((x[:-1] < 0) & (x[1:] >= 0)) + 1
    if idx.size < 2:
        return np.empty(0), np.empty(0)
    p2p = np.maximum.reduceat(x, idx)[:-1] - np.minimum.reduceat(x, idx)[:-1]
    return p2p, idx[:-1] / fs


def detect_settling(signal, fs: float, band: float = 0.02, n_cycles: int = 50) -> Settling:
    """Earliest run of ``n_cycles`` cycles whose peak-to-peak stays within
    ``+-band`` of the run mean.

    Cycles are delimited by rising zero crossings. Returns the run's mean
    peak-to-peak halved, and the start time of its first cycle.
    """
    if not 0 < band <= 0.2:
        raise ValidationError(f"band must be in (0, 0.2], got {band}")
    if n_cycles < 10:
        raise ValidationError(f"n_cycles must be >= 10, got {n_cycles}")
    p2p, starts = cycle_peak_to_peak(signal, fs)
    if p2p.size < n_cycles:
        return Settling(False, math.nan, math.nan)
    win = np.lib.stride_tricks.sliding_window_view(p2p, n_cycles)
    mean = win.mean(axis=1)
    ok = (np.abs(win - mean[:, None]).max(axis=1) <= band * mean) & (mean > 0)
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        return Settling(False, math.nan, math.nan)
    j = int(hits[0])
    return Settling(True, float(mean[j] / 2), float(starts[j]))


@dataclass
class LoopTrace:
    """Sampled loop waveforms (possibly decimated) and settled metrics.

    ``settled_*`` and ``startup_time`` are NaN unless settling was detected.
    """

    time: np.ndarray
    tip_displacement: np.ndarray
    tip_velocity: np.ndarray
    bridge_voltage: np.ndarray
    coil_current: np.ndarray
    sample_rate: float
    decimate: int
    settled: bool = False
    settled_amplitude: float = math.nan
    settled_frequency: float = math.nan
    startup_time: float = math.nan
    counter_count: int = 0
    noise_floor: float = math.nan
    peak_signal: float = math.nan


def run_oscillator(device: CantileverDevice, modal: ModalModel, bridge: BridgeConfig,
                   loop: LoopConfig, duration: float, seed: int = 0, *,
                   counter: CounterConfig | None = None, delta_m: float = 0.0,
                   dc_disturbance: float = 0.0, disturbance_time: float = 0.0,
                   decimate: int = 1, band: float = 0.02, n_cycles: int = 100,
                   require_settled: bool = True) -> LoopTrace:
    """Simulate the closed loop from noise start-up and measure the steady state.

    ``delta_m`` is tip-equivalent added mass; the all-pass stays tuned to the
    unloaded resonance. Start-up comes from bridge noise alone, or from a 1 pm
    displacement when the bridge is noiseless. After settling is detected the
    counter reads one gate on the ``loop.counter_tap`` signal.

    Raises
    ------
    NoOscillationError
        Signal amplitude never exceeds ten times the noise floor.
    NotSettledError
        Settling not detected, or too little time left for a counter gate
        (only when ``require_settled``).
    """
    f0 = modal.natural_frequency
    cfg = loop.resolve(f0)
    counter = counter or CounterConfig()
    if duration < 100 / f0:
        raise ValidationError(f"duration must be >= 100/f0 ({100 / f0:.4g} s), got {duration}")
    if decimate < 1:
        raise ValidationError(f"decimate must be >= 1, got {decimate}")
    fs = cfg.sample_rate
    dt = 1 / fs
    n = int(math.ceil(duration * fs))
    plant = modal.with_added_mass(delta_m) if delta_m else modal

    white, flicker = noise_components(bridge, dt, n, seed)
    noise = white + flicker
    noisy = bridge.white_noise_density > 0
    disturb = np.zeros(n)
    disturb[int(round(disturbance_time * fs)):] = dc_disturbance
    z0 = 0.0 if noisy else KICK_DISPLACEMENT

    hp = [filters.highpass(c, fs) for c in cfg.hpf_cutoffs]
    ap = filters.allpass(cfg.phase_center, fs)
    spm = dynamic_strain_per_meter(device.geometry)
    z, v, vb, cur, hpo = _loop_kernel(
        n, z0, 0.0, plant.spring_constant, plant.effective_mass, plant.damping, dt,
        spm, bridge.sensitivity, noise, disturb, cfg.dda_gain,
        np.array([s.b0 for s in hp]), np.array([s.b1 for s in hp]), np.array([s.a1 for s in hp]),
        ap.b0, ap.b1, ap.a1, cfg.vga_gain, cfg.limiter_level, cfg.limiter_mode == "hard",
        cfg.coil_resistance, cfg.buffer_current_limit, cfg.field * cfg.coil_length)

    if not np.all(np.isfinite(z)):
        raise SimulationError("simulation diverged (non-finite displacement)")
    if np.max(np.abs(z)) * spm >= MAX_STRAIN:
        raise SimulationError("clamp strain left the linear bridge region")

    sl = slice(None, None, decimate)
    trace = LoopTrace(np.arange(n)[sl] / fs, z[sl], v[sl], vb[sl], cur[sl], fs, decimate)
    signal_v = bridge.sensitivity * spm * z
    trace.peak_signal = float(np.max(np.abs(signal_v)))
    trace.noise_floor = float(np.std(noise)) if noisy else bridge.sensitivity * spm * KICK_DISPLACEMENT
    if trace.peak_signal <= OSCILLATION_FACTOR * trace.noise_floor:
        err = NoOscillationError(
            f"no oscillation: peak signal {trace.peak_signal:.3g} V never exceeds "
            f"{OSCILLATION_FACTOR:g} x noise floor {trace.noise_floor:.3g} V")
        err.trace = trace
        raise err

    # settling is only searched once the oscillation has risen out of the noise
    onset = int(np.argmax(np.abs(signal_v) > OSCILLATION_FACTOR * trace.noise_floor))
    st = detect_settling(z[onset:], fs, band, n_cycles)
    if st.settled:
        trace.settled = True
        trace.settled_amplitude = st.amplitude
        trace.startup_time = st.time + onset / fs
        tap = {"hpf": hpo, "bridge": vb, "displacement": z, "coil": cur}[cfg.counter_tap]
        tail = tap[int(round(trace.startup_time * fs)):]
        if tail.size / fs >= counter.gate_time + 2 / f0:
            reading = measure_frequency(tail, fs, counter)
            trace.settled_frequency = reading.frequency
            trace.counter_count = reading.count
        elif require_settled:
            err = NotSettledError(
                f"not settled: only {tail.size / fs:.4g} s left after settling at "
                f"{trace.startup_time:.4g} s, counter gate needs {counter.gate_time:g} s")
            err.trace = trace
            raise err
    elif require_settled:
        err = NotSettledError(f"not settled within {duration:g} s")
        err.trace = trace
        raise err
    return trace
