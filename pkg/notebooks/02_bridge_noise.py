"""
Bridge output and noise
=======================

Strain to voltage, and a look at the synthesized 1/f-plus-white noise.
"""

import numpy as np
from scipy import signal

from cantisense.bridge import BridgeConfig, band_power, bridge_output, noise_psd, sample_noise

bridge = BridgeConfig(bias_voltage=5.0, gauge_factor=100.0, active_fraction=0.5)
print(f"sensitivity {bridge.sensitivity:.0f} V/strain")
print(f"10 nm tip swing -> {bridge_output(bridge, 3e-7) * 1e6:.1f} uV")

# %%
# PMOS bridges are flicker dominated; the default corner is 10 kHz.
fs, n = 100e3, 2**20
x = sample_noise(bridge, 1 / fs, n, seed=1)
f, pxx = signal.welch(x, fs, nperseg=2**14)
for fc in (100, 1000, 10000, 40000):
    i = np.argmin(abs(f - fc))
    print(f"{f[i]:8.0f} Hz: measured {pxx[i]:.2e}, model {noise_psd(bridge, f[i]):.2e} V^2/Hz")

# %%
# Slope of the flicker region, in decades per decade.
band = (f >= 100) & (f <= 1000)
print(f"slope {np.polyfit(np.log10(f[band]), np.log10(pxx[band]), 1)[0]:.2f}")
print(f"rms in [1 Hz, 10 kHz]: {np.sqrt(band_power(bridge, 1, 1e4)) * 1e6:.2f} uV")
