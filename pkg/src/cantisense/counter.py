"""Digital frequency readout by gated or reciprocal counting.

Rising crossings go through a Schmitt comparator centred on zero: the
comparator arms below ``-h/2`` and fires above ``+h/2``. The crossing time
is the last zero crossing before firing, linearly interpolated between
samples. Gating is synchronous: the gate opens on the first rising crossing.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np

from .errors import Checker, Issue, NoSignalError, ValidationError


class CounterMode(enum.Enum):
    GATED = "gated"
    RECIPROCAL = "reciprocal"


@dataclass(frozen=True)
class CounterConfig:
    gate_time: float = 0.1
    mode: CounterMode = CounterMode.RECIPROCAL
    hysteresis: float = 0.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "mode", CounterMode(self.mode))
        except ValueError:
            raise ValidationError([Issue("mode", self.mode, f"one of {[m.value for m in CounterMode]}")]) from None
        c = Checker()
        c.require(self.gate_time > 0, "gate_time", self.gate_time, "> 0")
        c.require(self.hysteresis >= 0, "hysteresis", self.hysteresis, ">= 0")
        c.done()


class Reading(NamedTuple):
    frequency: float
    count: int


@numba.njit(cache=True)
def _crossings(x, half_h):
    out = np.empty(x.shape[0])
    n_out = 0
    armed = False
    last_zero = -1.0
    for i in range(x.shape[0]):
        xi = x[i]
        if i > 0 and x[i - 1] < 0.0 <= xi:
            last_zero = (i - 1) + (-x[i - 1]) / (xi - x[i - 1])
        if armed:
            if (xi > half_h or (half_h == 0.0 and xi >= 0.0)) and last_zero >= 0.0:
                out[n_out] = last_zero
                n_out += 1
                armed = False
        elif xi < -half_h:
            armed = True
            last_zero = -1.0
    return out[:n_out]


def rising_crossings(signal, fs: float, hysteresis: float = 0.0) -> np.ndarray:
    """Interpolated times (s) of hysteresis-qualified rising zero crossings."""
    x = np.ascontiguousarray(signal, dtype=float)
    return _crossings(x, hysteresis / 2) / fs


def measure_frequency(signal, fs: float, cfg: CounterConfig) -> Reading:
    """Estimate frequency over one gate of ``cfg.gate_time`` seconds.

    Gated mode returns ``count / gate_time``; reciprocal mode times the
    ``count`` whole periods that fit inside the gate.
    """
    x = np.asarray(signal, dtype=float)
    if x.size < cfg.gate_time * fs * (1 - 1e-12):
        raise ValidationError(
            f"signal has {x.size} samples, gate needs {cfg.gate_time * fs:.0f}")
    times = rising_crossings(x, fs, cfg.hysteresis)
    if times.size < 2:
        raise NoSignalError(f"no signal: {times.size} rising crossing(s) found")
    t0 = times[0]
    if (x.size - 1) / fs < t0 + cfg.gate_time:
        raise ValidationError(
            f"gate closes at {t0 + cfg.gate_time:.6g} s, after the signal ends at {(x.size - 1) / fs:.6g} s")
    # a crossing landing exactly on the gate edge is inside
    inside = times[1:][times[1:] <= t0 + cfg.gate_time + 1e-6 / fs]
    count = int(inside.size)
    if count == 0:
        raise NoSignalError("no signal: fewer than one full period inside the gate")
    if cfg.mode is CounterMode.GATED:
        return Reading(count / cfg.gate_time, count)
    return Reading(count / (inside[-1] - t0), count)
