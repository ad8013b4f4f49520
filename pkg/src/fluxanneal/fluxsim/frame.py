"""Single-SQUID computational frames and the annealing scheme they imply."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..errors import NumericalError
from ..problem import AnnealingSchedule, ControlSchedule
from .basis import QUBIT_GRID, CjjBasis, FluxGrid
from .device import CircuitDerived, DeviceParams, derive_circuit

RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class ComputationalFrame:
    """Two lowest states of one SQUID and the flux eigenbasis inside their span.

    Arrays are shaped ``(grid points, oscillator levels)``.  Gauge: ``g`` and
    ``e`` are real, ``up = (g + e) / sqrt(2)`` and ``down = (g - e) / sqrt(2)``
    in the symmetric case, so ``g`` is the ``|+>`` state.
    """

    phi_Jx: float
    E_L_value: float
    g: np.ndarray
    e: np.ndarray
    up: np.ndarray
    down: np.ndarray
    Delta: float
    p: float
    energies: np.ndarray

    @property
    def A(self):
        return 0.5 * self.Delta

    def B(self, derived: CircuitDerived):
        return derived.gamma * self.E_L_value**2 * self.p**2 * derived.c / derived.E_L


def squid_hamiltonian(params: DeviceParams, phi_Jx, E_L_value, grid: FluxGrid, basis: CjjBasis,
                      phi_x=0.0):
    """Dense single-SQUID Hamiltonian on ``grid x basis`` (grid index slow)."""
    phi = grid.points
    n = basis.truncation
    lattice = grid.kinetic(params.E_C) + np.diag(E_L_value * (phi - phi_x) ** 2 / 2)
    H = np.kron(lattice, np.eye(n)) + np.kron(np.eye(grid.n), np.diag(basis.levels()))
    H -= params.E_J * np.kron(np.diag(np.cos(phi)), basis.cos_half(phi_Jx))
    return H


def single_squid_frame(params: DeviceParams, phi_Jx, E_L_variant="bare", phi_J0x=None,
                       grid: FluxGrid = QUBIT_GRID, truncation=3) -> ComputationalFrame:
    """Diagonalize one SQUID at ``phi^x = 0`` and build its computational frame.

    Parameters
    ----------
    E_L_variant : {'bare', 'tilde'}
        Use ``E_L`` or the coupler-renormalized ``E_L_tilde(phi_J0x)``.
    phi_J0x : float, optional
        Coupler bias, required for the ``'tilde'`` variant.
    """
    if E_L_variant == "bare":
        E_L_value = params.E_L
    elif E_L_variant == "tilde":
        if phi_J0x is None:
            raise ValueError("the tilde variant needs phi_J0x")
        E_L_value = derive_circuit(params, phi_J0x).E_L_tilde
    else:
        raise ValueError(f"unknown E_L variant {E_L_variant!r}")
    basis = CjjBasis(params.E_CJ, params.E_LJ, truncation)
    H = squid_hamiltonian(params, phi_Jx, E_L_value, grid, basis)
    E, U = linalg.eigh(H, subset_by_index=[0, 3])
    resid = np.linalg.norm(H @ U[:, :2] - U[:, :2] * E[:2], axis=0).max()
    if resid > RESIDUAL_TOL * np.abs(E).max():
        raise NumericalError(f"single-SQUID eigensolve residual {resid:.3g}")
    g, e = U[:, 0], U[:, 1]
    # sign gauge for g: positive overlap with its own parity-even part
    if g.sum() < 0:
        g = -g
    phi = np.repeat(grid.points, truncation)
    P = np.array([[g @ (phi * g), g @ (phi * e)], [e @ (phi * g), e @ (phi * e)]])
    ev, V = np.linalg.eigh(P)
    up_c, down_c = V[:, 1], V[:, 0]
    if up_c[0] < 0:
        up_c = -up_c
    if down_c[0] < 0:
        down_c = -down_c
    # orient e so that up = (g + e)/sqrt(2) in the symmetric case
    if up_c[1] < 0:
        e = -e
        up_c = up_c * np.array([1, -1])
        down_c = down_c * np.array([1, -1])
    up = up_c[0] * g + up_c[1] * e
    down = down_c[0] * g + down_c[1] * e
    shape = (grid.n, truncation)
    return ComputationalFrame(float(phi_Jx), float(E_L_value), g.reshape(shape), e.reshape(shape),
                              up.reshape(shape), down.reshape(shape), float(E[1] - E[0]),
                              float(0.5 * (ev[1] - ev[0])), E - E[0])


@dataclass(frozen=True)
class Scheme:
    """Annealing scheme ``A(s), B(s)`` derived from a control schedule."""

    schedule: AnnealingSchedule
    p: np.ndarray
    E_L_variant: str
    phi_J0x: float | None
    grid: FluxGrid


def derive_scheme(params: DeviceParams, control: ControlSchedule, E_L_variant="bare", phi_J0x=None,
                  s_grid=None, grid: FluxGrid = QUBIT_GRID, truncation=3) -> Scheme:
    """Evaluate ``A = Delta / 2`` and ``B = gamma E_L'^2 p^2 c / E_L`` along a control schedule.

    ``s_grid`` defaults to the control samples.  ``gamma`` and ``c`` are device
    constants; only ``E_L'`` depends on the variant.
    """
    s = control.s if s_grid is None else np.asarray(s_grid, dtype=float)
    derived = derive_circuit(params, 0.0 if phi_J0x is None else phi_J0x)
    A, B, p = [], [], []
    for phi in control.phi(s):
        fr = single_squid_frame(params, phi, E_L_variant, phi_J0x, grid, truncation)
        A.append(fr.A)
        B.append(fr.B(derived))
        p.append(fr.p)
    return Scheme(AnnealingSchedule(s, A, B), np.array(p), E_L_variant, phi_J0x, grid)
