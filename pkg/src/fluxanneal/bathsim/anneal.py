"""Two-qubit anneals coupled to a spin bath, by symmetric product-formula steps."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..problem import AnnealingSchedule, IsingProblem, config_index, ground_states
from ..qubitsim import hamiltonian_at, initial_state
from .register import apply_gate, apply_two, bath_terms, coupling_terms, sparse_operator, term_gates
from .spec import SpinBathSpec
from .thermal import ThermalState, initial_bath_state

NORM_TOL = 1e-8
DEFAULT_BATH_TAU = 0.0025


@dataclass(frozen=True)
class BathStepPlan:
    """``H(s) = H_S(s) + H_B + lambda H_SB`` split into exactly exponentiable factors.

    ``terms`` holds the time-independent 1- and 2-site pieces of ``H_B`` and
    ``lambda H_SB``; the 4x4 system block on sites (0, 1) is rebuilt from
    the schedule at each step.
    """

    problem: IsingProblem
    schedule: AnnealingSchedule
    spec: SpinBathSpec
    terms: list

    @property
    def n_sites(self):
        return 2 + self.spec.n_bath

    def system_block(self, s):
        return hamiltonian_at(self.problem, self.schedule, s)

    def sparse(self, s):
        """Full sparse ``H(s)`` (for oracles and energies)."""
        return sparse_operator([((0, 1), self.system_block(s))] + self.terms, self.n_sites)

    def step(self, psi, s_mid, tau, half_gates=None):
        """One symmetric step ``g(tau/2)... S(tau) ...g(tau/2)`` in place."""
        gates = half_gates if half_gates is not None else term_gates(self.terms, tau / 2)
        n = self.n_sites
        for sites, U in gates:
            apply_gate(psi, sites, U, n)
        w, V = np.linalg.eigh(self.system_block(s_mid))
        S = np.ascontiguousarray((V * np.exp(-1j * tau * w)) @ V.conj().T)
        apply_two(psi, S, 0, 1, n)
        for sites, U in reversed(gates):
            apply_gate(psi, sites, U, n)
        return psi


def build_total_hamiltonian(problem: IsingProblem, schedule: AnnealingSchedule, spec: SpinBathSpec) -> BathStepPlan:
    if problem.n_qubits != 2:
        raise ValidationError("bath runs are defined for two qubits")
    return BathStepPlan(problem, schedule, spec, bath_terms(spec) + coupling_terms(spec))


def reduced_density_matrix(psi) -> np.ndarray:
    """4x4 qubit-pair state after tracing out the bath."""
    M = np.asarray(psi).reshape(4, -1)
    return M @ M.conj().T


@dataclass
class BathAnnealResult:
    success_probability: float
    rho: np.ndarray
    samples: dict = field(default_factory=dict)
    norm_drift: float = 0.0
    n_steps: int = 0
    thermal: ThermalState | None = None
    metadata: dict = field(default_factory=dict)


def _success(rho, problem):
    return float(sum(rho[config_index(c), config_index(c)].real for c in ground_states(problem)))


def anneal_with_bath(problem: IsingProblem, schedule: AnnealingSchedule, spec: SpinBathSpec, t_a,
                     tau=DEFAULT_BATH_TAU, initial="plus", sample_s=(), bath_state=None) -> BathAnnealResult:
    """Evolve ``|init> (x) |Phi(beta)>`` over ``s`` in ``[0, 1]`` and read the ground-set weight.

    ``initial`` is 'plus' (``|++>``) or 'ground' (ground state of ``H_S(0)``).
    ``bath_state`` overrides the thermal random state drawn from ``spec``.
    """
    if not t_a > 0 or not 0 < tau <= t_a:
        raise ValidationError("need t_a > 0 and 0 < tau <= t_a")
    plan = build_total_hamiltonian(problem, schedule, spec)
    thermal = None
    if bath_state is None:
        thermal = initial_bath_state(spec)
        bath_state = thermal.amplitudes
    bath_state = np.asarray(bath_state, dtype=complex)
    psi = np.kron(initial_state(problem, schedule, initial), bath_state)
    norm0 = np.linalg.norm(psi)
    nsteps = max(1, int(round(t_a / tau)))
    tau = t_a / nsteps
    half = term_gates(plan.terms, tau / 2)
    marks = {int(round(float(s) * nsteps)) for s in sample_s}
    samples = {}
    if 0 in marks:
        samples[0.0] = reduced_density_matrix(psi)
    for k in range(nsteps):
        plan.step(psi, (k + 0.5) / nsteps, tau, half)
        if k + 1 in marks:
            samples[(k + 1) / nsteps] = reduced_density_matrix(psi)
    rho = reduced_density_matrix(psi)
    drift = abs(np.linalg.norm(psi) - norm0)
    meta = dict(spec.metadata(), t_a=float(t_a), tau=float(tau), initial=str(initial))
    return BathAnnealResult(_success(rho, problem), rho, samples, float(drift), nsteps, thermal, meta)


def gibbs_reference(problem: IsingProblem, schedule: AnnealingSchedule, beta) -> float:
    """``p_0 = exp(-beta E_0) / Tr exp(-beta H_S(1))`` for the isolated qubits."""
    if beta < 0:
        raise ValidationError("beta must be non-negative")
    w = np.linalg.eigvalsh(hamiltonian_at(problem, schedule, 1.0))
    x = np.exp(-beta * (w - w[0]))
    return float(x[0] / x.sum())


@dataclass(frozen=True)
class SweepRow:
    beta: float
    mean: float
    std: float
    values: tuple
    gibbs: float


def _sweep_task(args):
    problem, schedule, spec, t_a, tau, initial = args
    return anneal_with_bath(problem, schedule, spec, t_a, tau, initial).success_probability


def workers_from_env(default=1) -> int:
    raw = os.environ.get("FLUXANNEAL_WORKERS")
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"FLUXANNEAL_WORKERS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError("FLUXANNEAL_WORKERS must be at least 1")
    return n


def beta_sweep(problem, schedule, spec: SpinBathSpec, betas, seeds, t_a, tau=DEFAULT_BATH_TAU,
               initial="plus", workers=None) -> list:
    """Seed-averaged success probability for each ``beta``; order of results is fixed."""
    workers = workers_from_env() if workers is None else workers
    tasks = [(problem, schedule, spec.with_(beta=float(b), seed=int(sd)), t_a, tau, initial)
             for b in betas for sd in seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            values = list(ex.map(_sweep_task, tasks))
    else:
        values = [_sweep_task(t) for t in tasks]
    rows, k = [], 0
    for b in betas:
        v = np.array(values[k:k + len(seeds)])
        k += len(seeds)
        rows.append(SweepRow(float(b), float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0,
                             tuple(float(x) for x in v), gibbs_reference(problem, schedule, b)))
    return rows
