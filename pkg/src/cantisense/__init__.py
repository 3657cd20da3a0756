"""Behavioral simulator for CMOS cantilever biosensors.

Static surface-stress readout (Stoney bending, piezoresistive bridge,
chopper-stabilized chain) and resonant mass sensing (Lorentz-force feedback
oscillator with a digital frequency counter), driven by Langmuir binding.
"""
from .assay import AssayConfig, AssayState, coverage_to_load, equilibrium_coverage, langmuir_step
from .bridge import BridgeConfig, ResistorKind, bridge_output, noise_psd, sample_noise
from .counter import CounterConfig, CounterMode, measure_frequency
from .errors import (NoOscillationError, NoSignalError, NotSettledError, OffsetRangeError,
                     SimulationError, ValidationError)
from .mech import (CantileverDevice, Geometry, Material, ModalModel, OscState, clamp_strain,
                   effective_mass, mass_loaded_frequency, modal_model, oscillator_step,
                   reference_device, spring_constant, stoney_tip_deflection)
from .resonant_loop import LoopConfig, LoopTrace, critical_vga_gain, detect_settling, run_oscillator
from .static_chain import ChainState, StaticChainConfig, calibrate_offset, process_sample, select_channel

__version__ = "0.1.0"
