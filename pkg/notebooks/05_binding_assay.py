"""
Binding assay
=============

Langmuir kinetics drive both sensing modes: bound mass shifts the
resonance, bound-layer stress bends the beam.
"""

import numpy as np

from cantisense.assay import AssayConfig, coverage_to_load, equilibrium_coverage, simulate_binding
from cantisense.mech import mass_loaded_frequency, modal_model, reference_device

model = modal_model(reference_device())
base = AssayConfig()  # K_d = 1 nM
print(f"K_d = {base.dissociation_constant * 1e9:.1f} nM")

for c in (1e-10, 1e-9, 1e-8, 1e-7):
    cfg = AssayConfig(concentration=c)
    t, theta = simulate_binding(cfg, 3600.0, n_out=7)
    dm, ds = coverage_to_load(theta[-1], cfg)
    df = mass_loaded_frequency(model, dm) - model.natural_frequency
    print(f"C = {c:.0e} M: theta(1 h) = {theta[-1]:.3f} (eq {equilibrium_coverage(cfg):.3f}), "
          f"df = {df:7.3f} Hz, dsigma = {ds * 1e3:.2f} mN/m")

# %%
# The full experiment runner covers the same ground from a YAML spec:
#
#   cantisense default-config --mode assay_resonant > assay.yaml
#   cantisense simulate-assay --config assay.yaml --out results/
