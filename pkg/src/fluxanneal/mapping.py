"""Closed-form coupler algebra and the effective two-qubit Hamiltonian.

The functions here take plain floats (or arrays) so that they can be reused
by the circuit solver, the fitting code and the command line without
constructing device objects.  All energies are in rad/ns.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .problem import AnnealingSchedule, IsingProblem

CROSSTALK_WARN = 0.05

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SZ = np.diag([1.0, -1.0])
_I2 = np.eye(2)


def coupler_phase(phi_J0x, E_J0, E_LJ0):
    """Expected CJJ flux of the coupler in its shifted-oscillator ground state."""
    phi_J0x = np.asarray(phi_J0x, dtype=float)
    return phi_J0x - 2.0 * E_J0 * np.sin(phi_J0x / 2) / (4.0 * E_LJ0 + E_J0 * np.cos(phi_J0x / 2))


def beta_eff(phi_J0x, E_J0, E_LJ0, E_L_eff):
    """Screening parameter ``(E_J0 / E_L_eff) cos(<phi_J0> / 2)``."""
    return E_J0 / E_L_eff * np.cos(coupler_phase(phi_J0x, E_J0, E_LJ0) / 2)


def tilde_factor(beta, c):
    """``E_L_tilde / E_L = 1 + c * beta / (1 + beta)`` with ``c = M^2 / (L L_eff)``."""
    return 1.0 + c * beta / (1.0 + beta)


def coupling_ratio(beta, c):
    """``beta E_L^2 / ((1 + beta) E_L_tilde^2)``; equals ``-J gamma`` on the mapping branch."""
    x = beta / (1.0 + beta)
    return x / (1.0 + c * x) ** 2


def crosstalk_coefficient(E_L_tilde, E_L, c, gamma):
    return E_L_tilde / E_L * c * gamma


@dataclass(frozen=True)
class QubitMapping:
    """Two-qubit model obtained from the circuit, including the field crosstalk.

    Parameters
    ----------
    schedule : AnnealingSchedule
        ``A(s)`` and ``B(s)``.
    h : tuple of float
        Target fields of the two qubits.
    J : float
        Target coupling.
    c_x : float
        Crosstalk coefficient ``(E_L_tilde / E_L) M^2 / (L L_eff) gamma``.
    include_crosstalk : bool
        Drop the ``c_x`` term when False so comparisons can isolate it.
    """

    schedule: AnnealingSchedule
    h: tuple
    J: float
    c_x: float = 0.0
    include_crosstalk: bool = True

    def __post_init__(self):
        if len(self.h) != 2:
            raise ValueError("QubitMapping describes exactly two qubits")
        if abs(self.c_x) > CROSSTALK_WARN:
            warnings.warn(
                f"crosstalk coefficient {self.c_x:.3g} is not small; the two-level mapping may be poor",
                stacklevel=2,
            )

    @classmethod
    def from_device(cls, schedule, problem: IsingProblem, derived, **kwargs):
        """Build from an :class:`IsingProblem` and a ``CircuitDerived`` at the coupler bias."""
        c_x = crosstalk_coefficient(derived.E_L_tilde, derived.E_L, derived.c, derived.gamma)
        return cls(schedule, tuple(problem.h), problem.J.get((0, 1), 0.0), c_x, **kwargs)

    @property
    def effective_fields(self):
        """Fields seen by the qubits once the crosstalk shift is folded in."""
        h1, h2 = self.h
        cx = self.c_x if self.include_crosstalk else 0.0
        return (h1 - cx * self.J * h2, h2 - cx * self.J * h1)


def effective_qubit_hamiltonian(mapping: QubitMapping, s) -> np.ndarray:
    """Dense 4x4 Hamiltonian of the mapped two-qubit model at ``s``.

    ``-A (sx1 + sx2) - B (h1 sz1 + h2 sz2 + J sz1 sz2 - c_x J (h1 sz2 + h2 sz1))``
    """
    A = float(mapping.schedule.A(s))
    B = float(mapping.schedule.B(s))
    f1, f2 = mapping.effective_fields
    X = np.kron(_SX, _I2) + np.kron(_I2, _SX)
    Z = f1 * np.kron(_SZ, _I2) + f2 * np.kron(_I2, _SZ) + mapping.J * np.kron(_SZ, _SZ)
    return -A * X - B * Z
