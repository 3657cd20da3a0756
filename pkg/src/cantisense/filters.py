"""First-order discrete sections from the bilinear transform with prewarping.

Every section is ``H(z) = (b0 + b1 z^-1) / (1 + a1 z^-1)`` run in transposed
direct form II, so its whole state is one float.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import signal

from .errors import ValidationError


class Section(NamedTuple):
    b0: float
    b1: float
    a1: float

    def step(self, state: float, x: float) -> tuple[float, float]:
        y = self.b0 * x + state
        return self.b1 * x - self.a1 * y, y

    def run(self, x, state: float = 0.0):
        """Filter an array; returns ``(y, final_state)``."""
        y, zf = signal.lfilter([self.b0, self.b1], [1.0, self.a1], np.asarray(x, dtype=float), zi=[state])
        return y, float(zf[0])

    def response(self, f, fs: float):
        """Complex frequency response at ``f`` (Hz)."""
        zinv = np.exp(-2j * np.pi * np.asarray(f, dtype=float) / fs)
        return (self.b0 + self.b1 * zinv) / (1 + self.a1 * zinv)


def _warp(cutoff: float, fs: float) -> float:
    if not 0 < cutoff < fs / 2:
        raise ValidationError(f"cutoff must be in (0, fs/2) = (0, {fs / 2:g}), got {cutoff}")
    return math.tan(math.pi * cutoff / fs)


def lowpass(cutoff: float, fs: float) -> Section:
    k = _warp(cutoff, fs)
    return Section(k / (1 + k), k / (1 + k), (k - 1) / (k + 1))


def highpass(cutoff: float, fs: float) -> Section:
    k = _warp(cutoff, fs)
    return Section(1 / (1 + k), -1 / (1 + k), (k - 1) / (k + 1))


def allpass(center: float, fs: float) -> Section:
    """Phase runs from 180 deg at DC through +90 deg at ``center`` to 0 at Nyquist."""
    k = _warp(center, fs)
    c = (1 - k) / (1 + k)
    return Section(c, -1.0, -c)


def hpf_step(filter_state: float, x: float, cutoff: float, fs: float) -> tuple[float, float]:
    """One sample of a first-order high-pass; returns ``(new_state, y)``."""
    return highpass(cutoff, fs).step(filter_state, x)
