"""Computational-subspace projection, leakage and two-qubit expectation values."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..problem import ControlSchedule, IsingProblem, config_index, ground_states
from .device import phi_x_for_h
from .frame import ComputationalFrame, single_squid_frame
from .propagator import (CircuitModel, FluxControls, FluxState, build_step_plan, coupler_ground,
                         evolve_flux, ground_state_full, product_guess)

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# ordering of the computational basis: up-up, up-down, down-up, down-down
COMPUTATIONAL_LABELS = ("uu", "ud", "du", "dd")


def project_computational(state: FluxState | np.ndarray, frame1: ComputationalFrame,
                          frame2: ComputationalFrame):
    """Reduced 4x4 density matrix on ``span{up, down}^2`` and the leakage ``1 - Tr``.

    The coupler indices ``(l0, m0)`` are traced out; the remaining amplitudes
    are projected onto the up/down product states of the two frames.
    """
    psi = state.amplitudes if isinstance(state, FluxState) else np.asarray(state)
    B1 = np.stack([frame1.up, frame1.down])
    B2 = np.stack([frame2.up, frame2.down])
    amp = np.einsum("sbj,tck,aibjck->aist", B1.conj(), B2.conj(), psi, optimize=True)
    amp = amp.reshape(-1, 4)
    rho = amp.T @ amp.conj()
    rho = 0.5 * (rho + rho.conj().T)
    leakage = float(min(max(1.0 - rho.trace().real, 0.0), 1.0))
    return rho, leakage


def pauli_pair(alpha, beta):
    return np.kron(PAULI[alpha], PAULI[beta])


def static_expectations(rhos, pairs):
    """``Tr(rho sigma_1^a sigma_2^b)`` for each density matrix and each ``(a, b)`` pair.

    Returns an array of shape ``(len(rhos), len(pairs))``.
    """
    ops = [pauli_pair(a, b) for a, b in pairs]
    return np.array([[np.trace(r @ op).real for op in ops] for r in rhos])


def embed_computational(model: CircuitModel, frame1, frame2, amplitudes4, coupler=None):
    """Circuit state ``coupler (x) sum c_st |s>|t>`` from four computational amplitudes."""
    coupler = coupler_ground(model) if coupler is None else coupler
    c = np.asarray(amplitudes4, dtype=complex).reshape(2, 2)
    B1 = np.stack([frame1.up, frame1.down])
    B2 = np.stack([frame2.up, frame2.down])
    psi = np.einsum("st,sbj,tck,ai->aibjck", c, B1, B2, coupler)
    return psi / np.linalg.norm(psi)


def qubit_frames(model: CircuitModel, phi_J, variant="tilde"):
    """Frames of the two qubit SQUIDs (identical devices) on the model's qubit grid."""
    fr = single_squid_frame(model.params, phi_J, variant, model.phi_J0x, grid=model.qubit_grid,
                            truncation=model.truncation)
    return fr, fr


def controls_for_problem(model: CircuitModel, problem: IsingProblem, control: ControlSchedule,
                         n_table=41, variant="tilde"):
    """External fluxes realizing ``problem``: ``phi_i^x(s)`` from the frame's ``p(s)``."""
    s_tab = np.linspace(0.0, 1.0, n_table)
    p = np.array([qubit_frames(model, phi, variant)[0].p for phi in control.phi(s_tab)])
    h = np.asarray(problem.h)
    table = np.stack([phi_x_for_h(model.params, model.derived, hk, p) for hk in h], axis=1)
    return FluxControls(control, s_tab, table)


@dataclass
class FluxAnnealResult:
    problem: IsingProblem
    success_probability: float
    rho_final: np.ndarray
    leakage_final: float
    trajectory: list = field(default_factory=list)
    norm_drift: float = 0.0
    initial_leakage: float = 0.0

    def populations(self):
        return np.real(np.diag(self.rho_final))


def success_from_rho(rho, problem: IsingProblem):
    return float(sum(rho[config_index(c), config_index(c)].real for c in ground_states(problem)))


def run_flux_anneal(params, problem: IsingProblem, control: ControlSchedule, t_a, tau=5e-5,
                    qubit_grid=None, coupler_grid=None, observe_s=(), variant="tilde", phi_J0x=None,
                    ground_dtau=2e-4):
    """Full circuit anneal of a two-qubit problem starting in the ground state of ``H(0)``.

    Returns the final computational density matrix, success probability and
    a trajectory of ``(s, populations, trace, leakage)`` rows at ``observe_s``.
    """
    from .device import map_J_to_phi

    J = problem.J.get((0, 1), 0.0)
    phi_J0x = map_J_to_phi(params, J) if phi_J0x is None else phi_J0x
    kw = {}
    if qubit_grid is not None:
        kw["qubit_grid"] = qubit_grid
    if coupler_grid is not None:
        kw["coupler_grid"] = coupler_grid
    model = CircuitModel(params, phi_J0x, **kw)
    controls = controls_for_problem(model, problem, control, variant=variant)
    plan = build_step_plan(model, controls, t_a)
    f1, f2 = qubit_frames(model, float(control.phi(0.0)), variant)
    guess = product_guess(model, f1.g, f2.g, coupler_ground(model))
    psi0 = ground_state_full(plan, 0.0, guess, dtau=ground_dtau)
    trajectory = []

    def observer(s, st):
        a, b = qubit_frames(model, float(control.phi(s)), variant)
        rho, leak = project_computational(st, a, b)
        trajectory.append((s, np.real(np.diag(rho)).copy(), float(rho.trace().real), leak))

    _, leak0 = project_computational(psi0, f1, f2)
    final = evolve_flux(plan, psi0, t_a, tau, observe_s=observe_s, observer=observer)
    a, b = qubit_frames(model, float(control.phi(1.0)), variant)
    rho, leak = project_computational(final, a, b)
    return FluxAnnealResult(problem, success_from_rho(rho, problem), rho, leak, trajectory,
                            abs(final.norm - 1.0), leak0)
