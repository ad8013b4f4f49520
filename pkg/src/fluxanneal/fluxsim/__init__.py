"""Circuit-level simulation of two rf-SQUID qubits joined by a tunable coupler."""

from .basis import CjjBasis, FluxGrid
from .device import CircuitDerived, DeviceParams, derive_circuit, load_device, map_J_to_phi, phi_x_for_h
from .frame import ComputationalFrame, Scheme, derive_scheme, single_squid_frame

__all__ = [
    "CircuitDerived",
    "CjjBasis",
    "ComputationalFrame",
    "DeviceParams",
    "FluxGrid",
    "Scheme",
    "derive_circuit",
    "derive_scheme",
    "load_device",
    "map_J_to_phi",
    "phi_x_for_h",
    "single_squid_frame",
]
