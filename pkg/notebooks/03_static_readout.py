"""
Static-mode readout
===================

Surface stress through the chopper-stabilized chain, with the offset nulled
by the DAC before the measurement.
"""

import numpy as np

from cantisense.bridge import BridgeConfig
from cantisense.mech import reference_device
from cantisense.static_chain import ChainState, StaticChainConfig, calibrate_offset, run_static

device = reference_device()
chain = StaticChainConfig()  # G1 = 100, gain2 = gain3 = sqrt(10)
quiet = BridgeConfig(white_noise_density=0.0)

code = calibrate_offset(ChainState.initial(chain), chain)
print(f"1 mV input offset nulled at DAC code {code} (midscale {chain.midscale})")

# %%
# 5 mN/m of differential surface stress.
trace = run_static(device, quiet, chain, 5e-3, 0.05, seed=0)
print(f"settled output {trace.settled_output * 1e3:.4f} mV")

# %%
# Chopping matters once flicker noise is switched on. A lower chopper
# frequency keeps this run short.
fast = dict(chop_frequency=2e3, lpf_cutoff=150.0, sample_rate=20e3, input_offset=0.0)
for db in (0.0, 40.0):
    cfg = StaticChainConfig(chop_suppression_db=db, **fast)
    tr = run_static(device, BridgeConfig(), cfg, 0.0, 10.0, seed=2, calibrate=False)
    print(f"suppression {db:4.0f} dB: output rms {np.std(tr.output[cfg.settle_samples():]) * 1e3:.3f} mV")
