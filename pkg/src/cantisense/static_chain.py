"""Behavioral model of the static-mode readout path.

Signal flow, one multiplexed channel at a time::

    bridge -> chopper first stage (G1) -> single-pole LPF -> offset DAC -> gain2 -> gain3

Chopping is parametric: the first-stage offset and the flicker part of the
bridge noise below the chopper frequency are scaled by the suppression
factor. Ripple at the chopper frequency is not modeled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np

from . import filters
from .bridge import BridgeConfig, bridge_output, noise_components
from .errors import Checker, OffsetRangeError, ValidationError
from .mech import CantileverDevice, clamp_strain

N_CHANNELS = 4


@dataclass(frozen=True)
class StaticChainConfig:
    chop_frequency: float = 10e3
    first_stage_gain: float = 100.0
    input_offset: float = 1e-3
    chop_suppression_db: float = 40.0
    lpf_cutoff: float = 100.0
    dac_bits: int = 16
    dac_full_scale: float = 0.05
    gain2: float = math.sqrt(10)
    gain3: float = math.sqrt(10)
    sample_rate: float | None = None
    n_channels: int = field(default=N_CHANNELS)

    def __post_init__(self):
        if self.sample_rate is None:
            object.__setattr__(self, "sample_rate", 100 * self.chop_frequency)
        c = Checker()
        c.require(self.n_channels == N_CHANNELS, "n_channels", self.n_channels, f"== {N_CHANNELS}")
        c.require(self.lpf_cutoff > 0, "lpf_cutoff", self.lpf_cutoff, "> 0")
        c.require(self.chop_frequency > 10 * self.lpf_cutoff, "chop_frequency", self.chop_frequency,
                  f"f_ch > 10*lpf_cutoff ({10 * self.lpf_cutoff:g} Hz)")
        for name in ("first_stage_gain", "gain2", "gain3", "dac_full_scale"):
            c.require(getattr(self, name) > 0, name, getattr(self, name), "> 0")
        c.require(isinstance(self.dac_bits, int) and 4 <= self.dac_bits <= 16, "dac_bits",
                  self.dac_bits, "integer in [4, 16]")
        c.require(self.chop_suppression_db >= 0, "chop_suppression_db", self.chop_suppression_db, ">= 0")
        c.require(self.sample_rate > 2 * self.chop_frequency, "sample_rate", self.sample_rate,
                  f"> 2*chop_frequency ({2 * self.chop_frequency:g} Hz)")
        c.done()

    @property
    def suppression(self) -> float:
        return 10 ** (-self.chop_suppression_db / 20)

    @property
    def total_gain(self) -> float:
        return self.first_stage_gain * self.gain2 * self.gain3

    @property
    def midscale(self) -> int:
        return 2 ** (self.dac_bits - 1)

    @property
    def lsb_output(self) -> float:
        """Output-referred change per DAC code."""
        return self.dac_full_scale / 2**self.dac_bits * self.gain2 * self.gain3

    def settle_samples(self, time_constants: float = 10) -> int:
        tau = 1 / (2 * math.pi * self.lpf_cutoff)
        return int(math.ceil(time_constants * tau * self.sample_rate))


@dataclass(frozen=True)
class ChainState:
    selected_channel: int = 0
    lpf_state: float = 0.0
    dac_code: int = 2**15
    chop_state: float = 0.0

    @classmethod
    def initial(cls, cfg: StaticChainConfig) -> "ChainState":
        return cls(dac_code=cfg.midscale)


def select_channel(state: ChainState, ch: int) -> ChainState:
    """Switch the multiplexer; filter states restart from zero."""
    if not 0 <= ch < N_CHANNELS:
        raise ValidationError(f"channel must be in [0, {N_CHANNELS - 1}], got {ch}")
    return replace(state, selected_channel=int(ch), lpf_state=0.0, chop_state=0.0)


def dac_offset(cfg: StaticChainConfig, code: int) -> float:
    if not 0 <= code < 2**cfg.dac_bits:
        raise ValidationError(f"dac_code must be in [0, {2**cfg.dac_bits - 1}], got {code}")
    return code / 2**cfg.dac_bits * cfg.dac_full_scale - cfg.dac_full_scale / 2


def _pick(state: ChainState, bridge_voltage):
    v = np.asarray(bridge_voltage, dtype=float)
    if v.ndim == 0 or (v.ndim == 1 and v.shape[0] != N_CHANNELS):
        return v
    return v[state.selected_channel]


def process_block(state: ChainState, cfg: StaticChainConfig, bridge_voltage,
                  white_noise=0.0, flicker_noise=0.0) -> tuple[ChainState, np.ndarray]:
    """Run the chain over a block of samples.

    ``bridge_voltage`` is either the selected channel's series, or a
    ``(4, n)`` array holding all four cantilevers, from which the
    multiplexer picks one row. The noise arguments are the white and flicker
    parts of the bridge noise for the selected channel.
    """
    v = np.asarray(_pick(state, bridge_voltage), dtype=float)
    if v.ndim == 0:
        v = v[None]
    n = v.size
    white = np.broadcast_to(np.asarray(white_noise, dtype=float), (n,))
    flicker = np.broadcast_to(np.asarray(flicker_noise, dtype=float), (n,))
    s = cfg.suppression
    xover = filters.lowpass(cfg.chop_frequency, cfg.sample_rate)
    flicker_low, chop_state = xover.run(flicker, state.chop_state)
    shaped = white + flicker + (s - 1) * flicker_low
    stage1 = cfg.first_stage_gain * (v + shaped + cfg.input_offset * s)
    lpf = filters.lowpass(cfg.lpf_cutoff, cfg.sample_rate)
    filtered, lpf_state = lpf.run(stage1, state.lpf_state)
    out = cfg.gain3 * cfg.gain2 * (filtered - dac_offset(cfg, state.dac_code))
    return replace(state, lpf_state=lpf_state, chop_state=chop_state), out


def process_sample(state: ChainState, cfg: StaticChainConfig, bridge_voltage,
                   bridge_noise: float = 0.0, flicker_noise: float = 0.0) -> tuple[ChainState, float]:
    """Single-sample version of :func:`process_block`.

    ``bridge_noise`` is the white component; the chopper leaves it alone.
    """
    s = cfg.suppression
    v = float(_pick(state, bridge_voltage))
    xover = filters.lowpass(cfg.chop_frequency, cfg.sample_rate)
    chop_state, flicker_low = xover.step(state.chop_state, flicker_noise)
    shaped = bridge_noise + flicker_noise + (s - 1) * flicker_low
    stage1 = cfg.first_stage_gain * (v + shaped + cfg.input_offset * s)
    lpf_state, filtered = filters.lowpass(cfg.lpf_cutoff, cfg.sample_rate).step(state.lpf_state, stage1)
    out = cfg.gain3 * cfg.gain2 * (filtered - dac_offset(cfg, state.dac_code))
    return replace(state, lpf_state=lpf_state, chop_state=chop_state), out


NoiseSource = Callable[[int], "tuple[np.ndarray, np.ndarray, np.ndarray] | np.ndarray"]


def calibrate_offset(state: ChainState, cfg: StaticChainConfig,
                     quiet_input_source: NoiseSource | None = None,
                     measure_samples: int | None = None) -> int:
    """Find the DAC code that nulls the mean settled output.

    ``quiet_input_source(n)`` returns either a voltage array or a
    ``(voltage, white, flicker)`` tuple for an unloaded cantilever; it is
    called once and the same samples are replayed for every trial code.
    The output is affine and decreasing in the code, so a bisection over the
    code range finds the zero crossing.

    Raises
    ------
    OffsetRangeError
        If the best code still leaves more than one output LSB of offset.
    """
    settle = cfg.settle_samples()
    measure = measure_samples or settle
    n = settle + measure
    if quiet_input_source is None:
        v, white, flicker = np.zeros(n), 0.0, 0.0
    else:
        src = quiet_input_source(n)
        v, white, flicker = src if isinstance(src, tuple) else (src, 0.0, 0.0)
    base = select_channel(state, state.selected_channel)

    def mean_out(code):
        _, out = process_block(replace(base, dac_code=code), cfg, v, white, flicker)
        return float(np.mean(out[settle:]))

    lo, hi = 0, 2**cfg.dac_bits - 1
    # smallest code whose mean output is <= 0
    while lo < hi:
        mid = (lo + hi) // 2
        if mean_out(mid) <= 0:
            hi = mid
        else:
            lo = mid + 1
    candidates = [c for c in (lo - 1, lo) if 0 <= c < 2**cfg.dac_bits]
    residuals = {c: abs(mean_out(c)) for c in candidates}
    best = min(candidates, key=lambda c: (residuals[c], abs(c - cfg.midscale)))
    if residuals[best] > cfg.lsb_output:
        raise OffsetRangeError(
            f"offset not compensable: residual {residuals[best]:.3g} V exceeds 1 LSB "
            f"({cfg.lsb_output:.3g} V) at code {best}")
    return best


class StaticTrace(NamedTuple):
    time: np.ndarray
    output: np.ndarray
    bridge_voltage: np.ndarray
    settled_output: float
    dac_code: int


def run_static(device: CantileverDevice, bridge: BridgeConfig, cfg: StaticChainConfig,
               dsigma_s, duration: float, seed: int, state: ChainState | None = None,
               calibrate: bool = True) -> StaticTrace:
    """Surface stress through Stoney strain, bridge and chain.

    ``dsigma_s`` is a constant or an array with one value per sample. With
    ``calibrate`` the offset is first nulled on an unloaded, noisy channel.
    ``settled_output`` averages the output after ten LPF time constants.
    """
    fs = cfg.sample_rate
    n = int(round(duration * fs))
    if n <= 0:
        raise ValidationError(f"duration must give at least one sample, got {duration}")
    state = state or ChainState.initial(cfg)
    cal_seq, run_seq = np.random.SeedSequence(seed).spawn(2)
    if calibrate:
        def quiet(m):
            w, fl = noise_components(bridge, 1 / fs, m, cal_seq)
            return np.zeros(m), w, fl
        state = replace(state, dac_code=calibrate_offset(state, cfg, quiet))
    stress = np.broadcast_to(np.asarray(dsigma_s, dtype=float), (n,))
    strain = clamp_strain(device.geometry, device.material, dsigma_s=stress)
    vb = bridge_output(bridge, strain)
    white, flicker = noise_components(bridge, 1 / fs, n, run_seq)
    state = select_channel(state, state.selected_channel)
    _, out = process_block(state, cfg, vb, white, flicker)
    settle = cfg.settle_samples()
    tail = out[settle:] if settle < n else out[n // 2:]
    return StaticTrace(np.arange(n) / fs, out, vb, float(np.mean(tail)), state.dac_code)
