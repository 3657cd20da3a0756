"""
Self-oscillating loop
=====================

The cantilever in a feedback loop: bridge, amplifier, high-pass filters,
limiter, buffer and Lorentz-force coil. The loop starts from bridge noise
and the counter reads the settled frequency.
"""

from cantisense.bridge import BridgeConfig
from cantisense.counter import CounterConfig
from cantisense.errors import NoOscillationError
from cantisense.mech import mass_loaded_frequency, modal_model, reference_device
from cantisense.resonant_loop import LoopConfig, critical_vga_gain, oscillation_frequency, run_oscillator

device = reference_device(quality_factor=1000)
model = modal_model(device)
bridge = BridgeConfig()
g_crit = critical_vga_gain(device, model, bridge, LoopConfig())
print(f"critical VGA gain {g_crit:.5f}, small-signal f_osc "
      f"{oscillation_frequency(device, model, bridge, LoopConfig()):.3f} Hz")

# %%
# Below the critical gain nothing happens.
try:
    run_oscillator(device, model, bridge, LoopConfig(vga_gain=0.5 * g_crit), 0.05)
except NoOscillationError as e:
    print(e)

# %%
# Above it the amplitude grows until the limiter holds it.
counter = CounterConfig(gate_time=0.1)
for factor in (1.5, 3.0):
    tr = run_oscillator(device, model, bridge, LoopConfig(vga_gain=factor * g_crit), 0.6, counter=counter)
    print(f"gain x{factor}: settled at {tr.startup_time * 1e3:.0f} ms, amplitude "
          f"{tr.settled_amplitude * 1e9:.0f} nm, f = {tr.settled_frequency:.2f} Hz")

# %%
# Mass sensing: 0.1 pg at the tip, read with a 1 s gate.
counter = CounterConfig(gate_time=1.0)
loop = LoopConfig(vga_gain=3 * g_crit)
f = [run_oscillator(device, model, bridge, loop, 1.25, counter=counter, delta_m=dm).settled_frequency
     for dm in (0.0, 1e-13)]
print(f"measured shift {f[1] - f[0]:.3f} Hz, "
      f"exact {mass_loaded_frequency(model, 1e-13) - model.natural_frequency:.3f} Hz")
