"""
Cantilever mechanics
====================

Closed-form stiffness, mass and resonance of the reference cantilever, then
the same numbers recovered from the time-domain integrator.
"""

import math
from dataclasses import replace

import numpy as np

from cantisense.mech import (OscState, clamp_strain, driven_response, mass_loaded_frequency,
                             modal_model, peak_frequency, reference_device, simulate,
                             stoney_tip_deflection)

# 500 x 100 x 5 um single-crystal silicon beam
device = reference_device(quality_factor=1000)
model = modal_model(device)
print(f"k     = {model.spring_constant:.4f} N/m")
print(f"m_eff = {model.effective_mass:.4e} kg")
print(f"f0    = {model.natural_frequency:.3f} Hz")

# %%
# Added mass lowers the resonance. For small loads the shift is linear.
for dm in (1e-15, 1e-14, 1e-13):
    df = mass_loaded_frequency(model, dm) - model.natural_frequency
    lin = -model.natural_frequency * dm / (2 * model.effective_mass)
    print(f"dm = {dm:.0e} kg: df = {df:9.4f} Hz (linear {lin:9.4f} Hz)")

# %%
# Surface stress bends the beam statically; the clamp strain is what a
# bridge at the root sees.
g, mat = device.geometry, device.material
z = stoney_tip_deflection(g, mat, 5e-3)
eps = clamp_strain(g, mat, dsigma_s=5e-3)
print(f"5 mN/m -> tip {z * 1e9:.3f} nm, clamp strain {eps:.3e}")

# %%
# Stepped-sine drive through resonance. The peak sits on f0.
f0 = model.natural_frequency
freqs = f0 * np.linspace(0.998, 1.002, 41)
amps = driven_response(model, freqs)
print(f"driven peak at {peak_frequency(freqs, amps):.2f} Hz, "
      f"peak/static = {amps.max() / (1e-9 / model.spring_constant):.0f}")

# %%
# Free ring-down at Q = 100 decays at omega0 / (2Q).
lossy = replace(model, quality_factor=100.0)
t, z, _ = simulate(lossy, np.zeros(200 * 150), 1 / (200 * f0), OscState(1e-9, 0.0))
peaks = np.flatnonzero((z[1:-1] > z[:-2]) & (z[1:-1] >= z[2:])) + 1
rate = -np.polyfit(t[peaks], np.log(z[peaks]), 1)[0]
print(f"decay rate {rate:.2f} 1/s, expected {lossy.omega0 / 200:.2f} 1/s")
