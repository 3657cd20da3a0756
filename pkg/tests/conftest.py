import sys

import pytest

from cantisense.bridge import BridgeConfig
from cantisense.mech import modal_model, reference_device

# reference device: 500 x 100 x 5 um silicon, E = 169 GPa, rho = 2330, nu = 0.25
REF_K = 4.225
REF_M_EFF = 1.4137275e-10
REF_F0 = 27513.8037527867180  # mpmath, 30 digits


@pytest.fixture
def device():
    return reference_device()


@pytest.fixture
def geom(device):
    return device.geometry


@pytest.fixture
def mat(device):
    return device.material


@pytest.fixture
def modal(device):
    return modal_model(device)


@pytest.fixture
def bridge():
    return BridgeConfig(bias_voltage=5.0, gauge_factor=100.0, active_fraction=0.5)


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    if acc is None:
        return
    ran = {int(r.nodeid.split("::test_")[1].split("_")[0])
           for key in ("passed", "failed", "error") for r in terminalreporter.stats.get(key, [])
           if "test_acceptance.py::test_" in r.nodeid and r.when == "call"}
    if not ran and not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in acc.NAMES.items():
        if n in acc.RESULTS:
            ok, detail = acc.RESULTS[n]
            terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {name}: {detail}")
        elif n in ran:
            terminalreporter.write_line(f"[FAIL] {n:2d}. {name}: raised before reporting")
