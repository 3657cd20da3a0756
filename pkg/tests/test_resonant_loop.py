import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cantisense.bridge import BridgeConfig
from cantisense.counter import CounterConfig
from cantisense.errors import NoOscillationError, ValidationError
from cantisense.mech import mass_loaded_frequency
from cantisense.resonant_loop import (
    LoopConfig, buffer_drive, critical_vga_gain, detect_settling, limiter, loop_gain,
    lorentz_force, oscillation_frequency, run_oscillator,
)

GATE = CounterConfig(gate_time=0.05)


@pytest.fixture(scope="module")
def ref():
    from cantisense.mech import modal_model, reference_device
    dev = reference_device()
    return dev, modal_model(dev), BridgeConfig()


@pytest.fixture(scope="module")
def critical(ref):
    return critical_vga_gain(*ref, LoopConfig())


def at_gain(critical, factor, **kw):
    return LoopConfig(vga_gain=factor * critical, **kw)


class TestBlocks:
    def test_lorentz(self):
        assert lorentz_force(0.0, 0.1, 1e-4) == 0.0
        assert lorentz_force(1e-3, 0.1, 100e-6) == pytest.approx(1e-8, rel=1e-12)

    @given(x=st.floats(-1.0, 1.0))
    def test_limiter_odd_and_bounded(self, x):
        assert limiter(-x, 1e-3) == -limiter(x, 1e-3)
        assert abs(limiter(x, 1e-3)) <= 1e-3

    def test_limiter_examples(self):
        assert limiter(0.0, 1e-3) == 0.0
        assert limiter(1e3, 1e-3) == pytest.approx(1e-3, rel=1e-15)
        assert limiter(-1e3, 1e-3) == pytest.approx(-1e-3, rel=1e-15)
        assert limiter(0.7, math.inf) == 0.7

    def test_buffer(self):
        cfg = LoopConfig()
        i_max, r = cfg.buffer_current_limit, cfg.coil_resistance
        assert buffer_drive(0.0, cfg) == 0.0
        assert buffer_drive(r * i_max / 2, cfg) == pytest.approx(i_max / 2, rel=1e-15)
        assert buffer_drive(10 * r * i_max, cfg) == i_max
        assert buffer_drive(-10 * r * i_max, cfg) == -i_max


class TestConfig:
    def test_hpf_limit(self, ref):
        f0 = ref[1].natural_frequency
        with pytest.raises(ValidationError, match="f0/10"):
            LoopConfig(hpf_cutoffs=(f0 / 5,)).resolve(f0)

    def test_sample_rate_limit(self, ref):
        f0 = ref[1].natural_frequency
        with pytest.raises(ValidationError, match="100\\*f0"):
            LoopConfig(sample_rate=50 * f0).resolve(f0)

    def test_defaults_resolve(self, ref):
        f0 = ref[1].natural_frequency
        cfg = LoopConfig().resolve(f0)
        assert cfg.hpf_cutoffs == (f0 / 100, f0 / 100)
        assert cfg.sample_rate == 100 * f0
        assert cfg.phase_center == f0


class TestSmallSignal:
    def test_oscillates_near_f0(self, ref):
        f0 = ref[1].natural_frequency
        assert oscillation_frequency(*ref, LoopConfig()) == pytest.approx(f0, rel=1e-4)

    def test_critical_gain_is_unity(self, ref, critical):
        f = oscillation_frequency(*ref, LoopConfig())
        g = loop_gain(*ref, LoopConfig(vga_gain=critical), f)
        assert abs(g) == pytest.approx(1.0, rel=1e-9)
        assert abs(np.angle(g)) < 1e-6


class TestSettlingDetector:
    fs = 1e6

    def test_constant_sine(self):
        t = np.arange(200_000) / self.fs
        st_ = detect_settling(2e-3 * np.sin(2 * np.pi * 10e3 * t), self.fs)
        assert st_.settled
        assert st_.amplitude == pytest.approx(2e-3, rel=1e-3)
        assert st_.time <= 2 / 10e3

    def test_growing(self):
        t = np.arange(200_000) / self.fs
        assert not detect_settling(np.exp(300 * t) * np.sin(2 * np.pi * 10e3 * t), self.fs).settled

    def test_jitter_within_band(self):
        rng = np.random.default_rng(2)
        cycles = 300
        amp = 1 + 0.005 * rng.uniform(-1, 1, cycles)
        t = np.arange(cycles * 100) / self.fs
        x = np.repeat(amp, 100) * np.sin(2 * np.pi * 10e3 * t)
        assert detect_settling(x, self.fs, band=0.02).settled


class TestClosedLoop:
    def test_no_oscillation_at_tiny_gain(self, ref, critical):
        with pytest.raises(NoOscillationError):
            run_oscillator(*ref, at_gain(critical, 0.1), 0.05, seed=1, counter=GATE)

    def test_vga_zero(self, ref):
        with pytest.raises(NoOscillationError):
            run_oscillator(*ref, LoopConfig(vga_gain=0.0), 0.01, seed=1, counter=GATE)

    def test_deterministic(self, ref, critical):
        a = run_oscillator(*ref, at_gain(critical, 3), 0.2, seed=4, counter=GATE, decimate=10)
        b = run_oscillator(*ref, at_gain(critical, 3), 0.2, seed=4, counter=GATE, decimate=10)
        assert a.tip_displacement.tobytes() == b.tip_displacement.tobytes()
        assert a.settled_frequency == b.settled_frequency

    def test_settles_without_clipping(self, ref, critical):
        loop = at_gain(critical, 3)
        tr = run_oscillator(*ref, loop, 0.2, seed=4, counter=GATE)
        assert tr.settled
        assert np.max(np.abs(tr.coil_current)) < loop.buffer_current_limit
        assert tr.settled_frequency == pytest.approx(ref[1].natural_frequency, rel=5e-3)

    @pytest.mark.slow
    def test_amplitude_monotone_in_gain(self, ref, critical):
        amps = [run_oscillator(*ref, at_gain(critical, g), 0.6, seed=2, counter=GATE).settled_amplitude
                for g in (1.5, 2.0, 3.0, 5.0)]
        assert np.all(np.diff(amps) > 0)

    @pytest.mark.slow
    def test_energy_balance(self, ref, critical):
        dev, modal, bridge = ref
        loop = at_gain(critical, 3).resolve(modal.natural_frequency)
        tr = run_oscillator(dev, modal, bridge, loop, 0.2, seed=4, counter=GATE)
        fs = tr.sample_rate
        start = int(tr.startup_time * fs)
        z = tr.tip_displacement[start:]
        rising = np.flatnonzero((z[:-1] < 0) & (z[1:] >= 0))
        a, b = rising[0] + start, rising[-1] + start
        v = tr.tip_velocity[a:b]
        force = lorentz_force(tr.coil_current[a:b], loop.field, loop.coil_length)
        work_in = np.sum(force * v) / fs
        loss = np.sum(modal.damping * v**2) / fs
        assert work_in == pytest.approx(loss, rel=0.02)

    @pytest.mark.slow
    def test_limiter_removed_hits_buffer_clamp(self, ref, critical):
        loop = at_gain(critical, 3, limiter_level=math.inf)
        tr = run_oscillator(*ref, loop, 0.3, seed=4, counter=GATE, require_settled=False)
        assert np.max(np.abs(tr.coil_current)) == loop.buffer_current_limit

    @pytest.mark.slow
    def test_mass_loading_shift(self, ref, critical):
        dev, modal, bridge = ref
        counter = CounterConfig(gate_time=1.0)
        f = [run_oscillator(dev, modal, bridge, at_gain(critical, 3), 1.25, seed=5, counter=counter,
                            delta_m=dm).settled_frequency for dm in (0.0, 1e-13)]
        expected = mass_loaded_frequency(modal, 1e-13) - modal.natural_frequency
        assert abs((f[1] - f[0]) - expected) <= 1 / counter.gate_time + 0.005 * abs(expected)
