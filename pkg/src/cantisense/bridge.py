"""Piezoresistive Wheatstone bridge: strain-to-voltage transduction and noise.

Noise is input-referred at the bridge output node, one-sided, with PSD

    S(f) = S_w * (1 + f_c / f)

The flicker part is synthesized in the time domain as a sum of first-order
low-pass filtered white sources with one pole per octave.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import Checker, Issue, ValidationError

MAX_STRAIN = 1e-2


class ResistorKind(enum.Enum):
    DIFFUSED = "diffused"
    PMOS_LINEAR = "pmos_linear"


DEFAULT_FLICKER_CORNER = {
    ResistorKind.DIFFUSED: 1e3,
    ResistorKind.PMOS_LINEAR: 10e3,
}


@dataclass(frozen=True)
class BridgeConfig:
    """Bridge parameters.

    ``flicker_corner=None`` picks the default for ``resistor_kind``.
    ``active_fraction`` is 0.5 for a half-active bridge, 1.0 for full-active.
    """

    bias_voltage: float = 5.0
    gauge_factor: float = 100.0
    active_fraction: float = 0.5
    resistor_kind: ResistorKind = ResistorKind.PMOS_LINEAR
    white_noise_density: float = 1e-16
    flicker_corner: float | None = None

    def __post_init__(self):
        try:
            kind = ResistorKind(self.resistor_kind)
        except ValueError:
            raise ValidationError([Issue("resistor_kind", self.resistor_kind,
                                         f"one of {[k.value for k in ResistorKind]}")]) from None
        object.__setattr__(self, "resistor_kind", kind)
        if self.flicker_corner is None:
            object.__setattr__(self, "flicker_corner", DEFAULT_FLICKER_CORNER[kind])
        c = Checker()
        c.require(self.bias_voltage > 0, "bias_voltage", self.bias_voltage, "> 0")
        c.require(self.gauge_factor > 0, "gauge_factor", self.gauge_factor, "> 0")
        c.require(0 < self.active_fraction <= 1, "active_fraction", self.active_fraction, "0 < x <= 1")
        c.require(self.white_noise_density >= 0, "white_noise_density", self.white_noise_density, ">= 0")
        c.require(self.flicker_corner >= 0, "flicker_corner", self.flicker_corner, ">= 0")
        floor = DEFAULT_FLICKER_CORNER[ResistorKind.DIFFUSED]
        c.require(kind is not ResistorKind.PMOS_LINEAR or self.flicker_corner >= floor,
                  "flicker_corner", self.flicker_corner, f">= {floor:g} Hz for pmos_linear bridges")
        c.done()

    @property
    def sensitivity(self) -> float:
        """Output volts per unit strain."""
        return self.bias_voltage * self.active_fraction * self.gauge_factor


def bridge_output(cfg: BridgeConfig, strain):
    """Noise-free differential output voltage for a clamp strain.

    Works elementwise on arrays.
    """
    strain_arr = np.asarray(strain, dtype=float)
    if np.any(np.abs(strain_arr) >= MAX_STRAIN):
        raise ValidationError(f"|strain| must be < {MAX_STRAIN} (linear region)")
    out = cfg.sensitivity * strain_arr
    return float(out) if out.ndim == 0 else out


def noise_psd(cfg: BridgeConfig, f):
    f_arr = np.asarray(f, dtype=float)
    if np.any(f_arr <= 0):
        raise ValidationError("noise_psd requires f > 0")
    out = cfg.white_noise_density * (1 + cfg.flicker_corner / f_arr)
    return float(out) if out.ndim == 0 else out


def flicker_poles(dt: float, n: int) -> np.ndarray:
    """Octave-spaced pole frequencies spanning [1/(n dt), 1/(2 dt)]."""
    f_lo = 1 / (n * dt)
    f_hi = 1 / (2 * dt)
    k = max(1, int(math.ceil(math.log2(f_hi / f_lo))) + 1)
    return f_lo * 2.0 ** np.arange(k)


def noise_components(cfg: BridgeConfig, dt: float, n: int, seed: int):
    """White and flicker parts of the bridge noise, as two arrays.

    Sources are drawn from one seeded generator in a fixed order, so the
    result is reproducible bit for bit. Each low-pass filter starts from a
    draw of its stationary distribution to avoid a start-up transient.
    """
    if not dt > 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    if not n > 0:
        raise ValidationError(f"n must be > 0, got {n}")
    n = int(n)
    fs = 1 / dt
    white = np.zeros(n)
    flicker = np.zeros(n)
    if cfg.white_noise_density == 0:
        return white, flicker
    rng = np.random.default_rng(seed)
    white = math.sqrt(cfg.white_noise_density * fs / 2) * rng.standard_normal(n)
    if cfg.flicker_corner == 0:
        return white, flicker
    # sum over octave-spaced Lorentzians A/p / (1 + (f/p)^2) -> A * pi / (2 ln2 f)
    level = 2 * math.log(2) * cfg.white_noise_density * cfg.flicker_corner / math.pi
    for p in flicker_poles(dt, n):
        a = math.exp(-2 * math.pi * p * dt)
        b = (1 - a) * math.sqrt(level * fs / (2 * p))
        sigma_stat = b / math.sqrt(1 - a * a)
        zi = [a * sigma_stat * rng.standard_normal()]
        src = rng.standard_normal(n)
        y, _ = signal.lfilter([b], [1.0, -a], src, zi=zi)
        flicker += y
    return white, flicker


def sample_noise(cfg: BridgeConfig, dt: float, n: int, seed: int) -> np.ndarray:
    """Seeded bridge-noise series whose PSD follows :func:`noise_psd`."""
    white, flicker = noise_components(cfg, dt, n, seed)
    return white + flicker


def band_power(cfg: BridgeConfig, f1: float, f2: float) -> float:
    """Closed-form integral of :func:`noise_psd` over [f1, f2] in V^2."""
    if not 0 < f1 < f2:
        raise ValidationError("band_power requires 0 < f1 < f2")
    return cfg.white_noise_density * ((f2 - f1) + cfg.flicker_corner * math.log(f2 / f1))
