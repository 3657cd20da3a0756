"""Acceptance criteria, one test each.

Every test records a one-line verdict with the measured value and the
tolerance; ``conftest.pytest_terminal_summary`` prints them after the run.
Run directly with ``python tests/test_acceptance.py`` for the same report.
"""
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy import signal

from cantisense.assay import AssayConfig, equilibrium_coverage, simulate_binding
from cantisense.bridge import BridgeConfig, noise_components
from cantisense.counter import CounterConfig, measure_frequency
from cantisense.errors import NoOscillationError, SimulationError
from cantisense.experiment import default_config, parse_spec, run_experiment
from cantisense.mech import (
    OscState, clamp_strain, driven_response, modal_model, peak_frequency, reference_device, simulate,
)
from cantisense.resonant_loop import LoopConfig, critical_vga_gain, run_oscillator
from cantisense.static_chain import StaticChainConfig, run_static

# frozen oracle values for the reference device (mpmath, 30 digits)
F0 = 27513.8037527867180
M_EFF = 1.4137275e-10
STATIC_OUTPUT = 3.32840236686390e-3  # Stoney -> strain -> bridge -> x1000 for 5 mN/m

RESULTS = {}

NAMES = {
    1: "driven-sweep peak vs f0",
    2: "ring-down decay rate",
    3: "RK4 order",
    4: "closed-loop mass-loading shift",
    5: "static end-to-end output",
    6: "oscillator start-up and threshold",
    7: "chopper noise suppression",
    8: "HPF benefit under DC disturbance",
    9: "counter quantization laws",
    10: "Langmuir kinetics",
    11: "1/f noise slope",
    12: "CSV determinism",
}


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    assert ok, detail


@pytest.fixture(scope="module")
def ref():
    dev = reference_device()
    return dev, modal_model(dev), BridgeConfig()


@pytest.fixture(scope="module")
def critical(ref):
    return critical_vga_gain(*ref, LoopConfig())


def test_1_driven_sweep(ref):
    errs = {}
    for q, span in ((50, 0.05), (1000, 0.002)):
        m = replace(ref[1], quality_factor=float(q))
        freqs = F0 * np.linspace(1 - span, 1 + span, 41)
        errs[q] = abs(peak_frequency(freqs, driven_response(m, freqs)) / F0 - 1)
    record(1, max(errs.values()) < 5e-3,
           ", ".join(f"Q={q}: {e:.2e}" for q, e in errs.items()) + " relative (tol 5e-3)")


def test_2_ring_down(ref):
    m = replace(ref[1], quality_factor=100.0)
    t, z, _ = simulate(m, np.zeros(200 * 150), 1 / (200 * F0), OscState(1e-9, 0.0))
    peaks = np.flatnonzero((z[1:-1] > z[:-2]) & (z[1:-1] >= z[2:])) + 1
    rate = -np.polyfit(t[peaks], np.log(z[peaks]), 1)[0]
    err = abs(rate / (m.omega0 / 200) - 1)
    record(2, err < 0.02, f"rate {rate:.4f} 1/s vs {m.omega0 / 200:.4f}, error {err:.2e} (tol 0.02)")


def test_3_rk4_order(ref):
    m = replace(ref[1], quality_factor=100.0)
    w0, zeta = m.omega0, 0.005
    wd = w0 * math.sqrt(1 - zeta**2)
    errs = []
    for n in (50, 100):
        t, z, _ = simulate(m, np.zeros(n), 1 / (n * F0), OscState(1e-9, 0.0))
        exact = 1e-9 * np.exp(-zeta * w0 * t) * (np.cos(wd * t) + zeta * w0 / wd * np.sin(wd * t))
        errs.append(np.max(np.abs(z - exact)))
    ratio = errs[0] / errs[1]
    record(3, 12 <= ratio <= 20, f"one-period error ratio {ratio:.2f} (range [12, 20])")


def test_4_mass_loading(ref, critical):
    dev, modal, bridge = ref
    dm = 7.07e-4 * M_EFF
    counter = CounterConfig(gate_time=1.0)
    loop = LoopConfig(vga_gain=3 * critical)
    f = [run_oscillator(dev, modal, bridge, loop, 1.25, seed=5, counter=counter, delta_m=x).settled_frequency
         for x in (0.0, dm)]
    shift = f[1] - f[0]
    expected = -F0 * dm / (2 * M_EFF)
    tol = 1 / counter.gate_time + 0.005 * abs(expected)
    record(4, abs(shift - expected) <= tol,
           f"shift {shift:.4f} Hz vs {expected:.4f} Hz, |diff| {abs(shift - expected):.4f} (tol {tol:.4f})")


def test_5_static_end_to_end(ref):
    dev = ref[0]
    cfg = StaticChainConfig()  # 1 mV first-stage offset, nulled by calibration
    assert cfg.total_gain == pytest.approx(1000.0)
    hand = 1000 * BridgeConfig().sensitivity * clamp_strain(dev.geometry, dev.material, dsigma_s=5e-3)
    assert hand == pytest.approx(STATIC_OUTPUT, rel=1e-12)
    tr = run_static(dev, BridgeConfig(white_noise_density=0.0), cfg, 5e-3, 0.05, seed=0)
    err = abs(tr.settled_output / STATIC_OUTPUT - 1)
    record(5, err < 0.01, f"settled {tr.settled_output * 1e3:.5f} mV vs {STATIC_OUTPUT * 1e3:.5f} mV, "
                          f"error {err:.2e} (tol 0.01), DAC code {tr.dac_code}")


def test_6_startup(ref, critical):
    loop = LoopConfig(vga_gain=3 * critical)
    tr = run_oscillator(*ref, loop, 0.25, seed=3, counter=CounterConfig(0.1))
    i_peak = float(np.max(np.abs(tr.coil_current)))
    try:
        run_oscillator(*ref, LoopConfig(vga_gain=0.1 * critical), 0.1, seed=3, counter=CounterConfig(0.05))
        quiet = False
    except NoOscillationError:
        quiet = True
    ok = tr.settled and i_peak < loop.buffer_current_limit and quiet
    record(6, ok, f"gain 3: settled={tr.settled} at {tr.startup_time * 1e3:.1f} ms, max |I| {i_peak:.2e} A "
                  f"(I_max {loop.buffer_current_limit:g}); gain 0.1: no oscillation={quiet}")


def test_7_chopper(ref):
    # shorter-than-default chopper/sample rates keep a 60 s record tractable
    fast = dict(chop_frequency=2e3, lpf_cutoff=150.0, sample_rate=20e3, input_offset=0.0)
    bridge = BridgeConfig(flicker_corner=10e3)
    powers = []
    for db in (0.0, 40.0):
        cfg = StaticChainConfig(chop_suppression_db=db, **fast)
        tr = run_static(ref[0], bridge, cfg, 0.0, 60.0, seed=21, calibrate=False)
        f, pxx = signal.welch(tr.output[cfg.settle_samples():], cfg.sample_rate, nperseg=2**18)
        band = (f >= 0.1) & (f <= 100)
        powers.append(np.trapezoid(pxx[band], f[band]))
    drop = 10 * math.log10(powers[0] / powers[1])
    record(7, drop >= 20, f"[0.1, 100] Hz output power drops {drop:.1f} dB (need >= 20)")


def test_8_hpf_benefit(ref, critical):
    errors = {}
    for label, cutoffs in (("with HPF", None), ("bypassed", ())):
        loop = LoopConfig(vga_gain=3 * critical, hpf_cutoffs=cutoffs)
        try:
            tr = run_oscillator(*ref, loop, 0.3, seed=8, counter=CounterConfig(0.1), dc_disturbance=10e-3)
            errors[label] = abs(tr.settled_frequency - F0)
        except SimulationError:
            errors[label] = math.inf  # the loop never produced a usable reading
    ok = errors["with HPF"] < errors["bypassed"]
    record(8, ok, ", ".join(f"{k}: {v:.3g} Hz" for k, v in errors.items()) + " frequency error")


def test_9_counter():
    fs = 1e6
    pairs = [(f, g) for f in (1234.5, 9876.54, 27500.7, 27513.8, 41234.567) for g in (0.01, 0.02, 0.05, 0.1)]
    worst, gated_err, recip_err = 0.0, [], []
    for f, gate in pairs:
        t = np.arange(int((gate + 3 / f) * fs)) / fs
        x = np.sin(2 * math.pi * f * t + 0.7)
        g = measure_frequency(x, fs, CounterConfig(gate, "gated"))
        r = measure_frequency(x, fs, CounterConfig(gate, "reciprocal"))
        worst = max(worst, abs(g.frequency - f) * gate)
        gated_err.append(abs(g.frequency - f))
        recip_err.append(abs(r.frequency - f))
    ratio = np.mean(gated_err) / np.mean(recip_err)
    record(9, worst <= 1 + 1e-9 and ratio >= 10,
           f"{len(pairs)} pairs: worst gated error {worst:.3f} counts (<= 1); "
           f"gated/reciprocal mean error {ratio:.3g}x (need >= 10)")


def test_10_langmuir():
    cfg = AssayConfig()
    t, theta = simulate_binding(cfg, 5 / cfg.observed_rate, n_out=400)
    eq = cfg.k_on * cfg.concentration / cfg.observed_rate
    err = float(np.max(np.abs(theta - eq * (1 - np.exp(-cfg.observed_rate * t)))))
    eq_err = max(abs(equilibrium_coverage(replace(cfg, concentration=c)) - c / (c + cfg.dissociation_constant))
                 for c in (0.0, 1e-12, 1e-9, 1e-9 * math.pi, 1e-6))
    record(10, err < 1e-6 and eq_err <= 1e-12,
           f"max trajectory error {err:.2e} (< 1e-6); equilibrium error {eq_err:.1e} (<= 1e-12)")


def test_11_flicker_slope():
    fs, n = 100e3, 2**20
    cfg = BridgeConfig(flicker_corner=10e3)
    white, flicker = noise_components(cfg, 1 / fs, n, 11)
    f, pxx = signal.welch(white + flicker, fs, nperseg=2**16)
    band = (f >= cfg.flicker_corner / 100) & (f <= cfg.flicker_corner / 10)
    slope = np.polyfit(np.log10(f[band]), np.log10(pxx[band]), 1)[0]
    record(11, -1.3 <= slope <= -0.7, f"slope {slope:.3f} decades/decade over [100, 1000] Hz (range [-1.3, -0.7])")


def test_12_determinism(tmp_path):
    same = {}
    for mode in ("characterize", "static", "resonant", "assay_static"):
        cfg = default_config(mode)
        if mode == "resonant":
            cfg["duration"], cfg["counter"]["gate_time"] = 0.2, 0.05
        spec = parse_spec(cfg)
        for run in ("a", "b"):
            run_experiment(spec, tmp_path / mode / run)
        files = sorted(p.name for p in (tmp_path / mode / "a").glob("*.csv"))
        same[mode] = all((tmp_path / mode / "a" / name).read_bytes() == (tmp_path / mode / "b" / name).read_bytes()
                         for name in files) and bool(files)
    record(12, all(same.values()), ", ".join(f"{m}: {'identical' if s else 'DIFFERENT'}" for m, s in same.items()))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
