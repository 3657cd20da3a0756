"""Langmuir binding kinetics and the coverage-to-load map.

Coverage obeys ``dtheta/dt = k_on C (1 - theta) - k_off theta``. Bound
coverage maps linearly onto added mass and differential surface stress.
Default constants are plausible antibody-antigen values, not measurements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import Checker, ValidationError

AVOGADRO = 6.02214076e23
ACCURACY_FACTOR = 1e-3


def molar_to_molecule_mass(molar_mass_g_per_mol: float) -> float:
    """kg per molecule from g/mol (150 kDa IgG -> 2.49e-22 kg)."""
    return molar_mass_g_per_mol * 1e-3 / AVOGADRO


@dataclass(frozen=True)
class AssayConfig:
    k_on: float = 1e5
    k_off: float = 1e-4
    concentration: float = 10e-9
    site_density: float = 1e16
    molecule_mass: float = 2.5e-22
    max_surface_stress: float = 5e-3
    active_area: float = 5e-8

    def __post_init__(self):
        c = Checker()
        for name in ("k_on", "site_density", "molecule_mass", "active_area"):
            c.require(getattr(self, name) > 0, name, getattr(self, name), "> 0")
        c.require(self.k_off >= 0, "k_off", self.k_off, ">= 0")
        c.require(self.concentration >= 0, "concentration", self.concentration, ">= 0")
        c.require(math.isfinite(self.max_surface_stress), "max_surface_stress",
                  self.max_surface_stress, "finite")
        c.done()

    @property
    def dissociation_constant(self) -> float:
        return self.k_off / self.k_on

    @property
    def observed_rate(self) -> float:
        """k_on C + k_off, the inverse relaxation time in 1/s."""
        return self.k_on * self.concentration + self.k_off


@dataclass(frozen=True)
class AssayState:
    theta: float = 0.0
    time: float = 0.0

    def __post_init__(self):
        if not 0 <= self.theta <= 1:
            raise ValidationError(f"theta must be in [0, 1], got {self.theta}")


def max_step(cfg: AssayConfig) -> float:
    return ACCURACY_FACTOR / cfg.observed_rate


def _rate(theta, cfg):
    return cfg.k_on * cfg.concentration * (1 - theta) - cfg.k_off * theta


def langmuir_step(state: AssayState, cfg: AssayConfig, dt: float) -> AssayState:
    """One RK4 step of the coverage ODE; ``dt`` may not exceed 1e-3/(k_on C + k_off)."""
    if cfg.observed_rate <= 0:
        raise ValidationError("k_on*C + k_off must be > 0")
    if not 0 < dt <= max_step(cfg) * (1 + 1e-12):
        raise ValidationError(f"dt must be in (0, {max_step(cfg):.4g}], got {dt}")
    th = state.theta
    k1 = _rate(th, cfg)
    k2 = _rate(th + 0.5 * dt * k1, cfg)
    k3 = _rate(th + 0.5 * dt * k2, cfg)
    k4 = _rate(th + dt * k3, cfg)
    th = th + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return AssayState(min(max(th, 0.0), 1.0), state.time + dt)


def simulate_binding(cfg: AssayConfig, duration: float, n_out: int = 200,
                     state: AssayState = AssayState()) -> tuple[np.ndarray, np.ndarray]:
    """Integrate coverage over ``duration`` at the largest allowed step.

    Returns ``n_out`` evenly spaced ``(time, theta)`` samples including both
    ends.
    """
    if cfg.observed_rate <= 0:
        if cfg.concentration == 0 and cfg.k_off == 0:
            t = state.time + np.linspace(0, duration, n_out)
            return t, np.full(n_out, state.theta)
        raise ValidationError("k_on*C + k_off must be > 0")
    t_out = state.time + np.linspace(0, duration, n_out)
    theta_out = np.empty(n_out)
    theta_out[0] = state.theta
    h_max = max_step(cfg)
    for i in range(1, n_out):
        span = t_out[i] - state.time
        steps = max(1, int(math.ceil(span / h_max)))
        h = span / steps
        th = state.theta
        for _ in range(steps):
            k1 = _rate(th, cfg)
            k2 = _rate(th + 0.5 * h * k1, cfg)
            k3 = _rate(th + 0.5 * h * k2, cfg)
            k4 = _rate(th + h * k3, cfg)
            th += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        state = AssayState(min(max(th, 0.0), 1.0), t_out[i])
        theta_out[i] = state.theta
    return t_out, theta_out


def equilibrium_coverage(cfg: AssayConfig) -> float:
    if cfg.observed_rate <= 0:
        raise ValidationError("equilibrium undefined for k_on*C + k_off = 0")
    return cfg.concentration / (cfg.concentration + cfg.dissociation_constant)


def coverage_to_load(theta, cfg: AssayConfig):
    """Added mass (kg) and differential surface stress (N/m) at coverage ``theta``."""
    th = np.asarray(theta, dtype=float)
    if np.any((th < 0) | (th > 1)):
        raise ValidationError("theta must be in [0, 1]")
    delta_m = th * cfg.site_density * cfg.active_area * cfg.molecule_mass
    dsigma = th * cfg.max_surface_stress
    if th.ndim == 0:
        return float(delta_m), float(dsigma)
    return delta_m, dsigma


def with_concentration(cfg: AssayConfig, concentration: float) -> AssayConfig:
    return replace(cfg, concentration=concentration)
