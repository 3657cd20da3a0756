import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cantisense.assay import (
    AssayConfig, AssayState, coverage_to_load, equilibrium_coverage, langmuir_step, max_step,
    molar_to_molecule_mass, simulate_binding, with_concentration,
)
from cantisense.errors import ValidationError


def closed_form(cfg, theta0, t):
    eq = cfg.k_on * cfg.concentration / cfg.observed_rate
    return eq + (theta0 - eq) * np.exp(-cfg.observed_rate * t)


def test_no_analyte_stays_zero():
    cfg = AssayConfig(concentration=0.0)
    s = AssayState()
    for _ in range(100):
        s = langmuir_step(s, cfg, max_step(cfg))
    assert s.theta == 0.0


def test_half_saturation():
    cfg = AssayConfig()
    cfg = with_concentration(cfg, cfg.dissociation_constant)
    _, theta = simulate_binding(cfg, 30 / cfg.observed_rate, n_out=5)
    assert theta[-1] == pytest.approx(0.5, abs=1e-9)


def test_equilibrium_examples():
    cfg = AssayConfig()
    assert equilibrium_coverage(with_concentration(cfg, 0.0)) == 0.0
    assert equilibrium_coverage(with_concentration(cfg, 9 * cfg.dissociation_constant)) == pytest.approx(0.9, abs=1e-15)
    assert equilibrium_coverage(AssayConfig(k_off=0.0)) == 1.0


@given(c=st.floats(1e-12, 1e-5), k_off=st.floats(1e-5, 1e-1))
def test_equilibrium_exact(c, k_off):
    cfg = AssayConfig(concentration=c, k_off=k_off)
    assert abs(equilibrium_coverage(cfg) - c / (c + k_off / cfg.k_on)) < 1e-12


def test_matches_closed_form():
    cfg = AssayConfig()
    t, theta = simulate_binding(cfg, 5 / cfg.observed_rate, n_out=400)
    assert np.max(np.abs(theta - closed_form(cfg, 0.0, t))) < 1e-6


@given(c=st.floats(1e-10, 1e-6), theta0=st.floats(0, 1))
@settings(max_examples=25, deadline=None)
def test_monotone_and_bounded(c, theta0):
    cfg = AssayConfig(concentration=c)
    _, theta = simulate_binding(cfg, 3 / cfg.observed_rate, n_out=50, state=AssayState(theta0))
    assert np.all((theta >= 0) & (theta <= 1))
    d = np.diff(theta)
    if theta0 < equilibrium_coverage(cfg):
        assert np.all(d >= -1e-15)
    else:
        assert np.all(d <= 1e-15)


def test_step_limit():
    cfg = AssayConfig()
    with pytest.raises(ValidationError, match="dt"):
        langmuir_step(AssayState(), cfg, 2 * max_step(cfg))


def test_load_examples():
    cfg = AssayConfig()
    assert coverage_to_load(0.0, cfg) == (0.0, 0.0)
    dm, ds = coverage_to_load(1.0, cfg)
    assert dm == pytest.approx(1.25e-13, rel=1e-12)
    assert ds == cfg.max_surface_stress


def test_molecule_mass():
    assert molar_to_molecule_mass(150e3) == pytest.approx(2.49081e-22, rel=1e-5)


def test_rejects_bad_coverage():
    with pytest.raises(ValidationError):
        AssayState(theta=1.5)
    with pytest.raises(ValidationError):
        coverage_to_load(-0.1, AssayConfig())
