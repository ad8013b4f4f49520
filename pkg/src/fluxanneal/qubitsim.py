"""Transverse-field Ising dynamics, spectra and adiabaticity diagnostics.

``H(s) = -A(s) sum_k sx_k - B(s) (sum_k h_k sz_k + sum_jk J_jk sz_j sz_k)``
with the basis ordering of :mod:`fluxanneal.problem`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import optimize

from .errors import CapacityError, ValidationError
from .problem import AnnealingSchedule, IsingProblem, config_index, ground_states

DENSE_GUARD = 14
EXACT_STEP_MAX_QUBITS = 4
DEFAULT_TAU = 1e-4
DEGENERACY_TOL = 1e-9
_CHUNK = 8192


def transverse_operator(n) -> np.ndarray:
    """Dense ``sum_k sx_k`` (real)."""
    dim = 2**n
    X = np.zeros((dim, dim))
    idx = np.arange(dim)
    for k in range(n):
        X[idx, idx ^ (1 << (n - 1 - k))] += 1.0
    return X


def hamiltonian_at(problem: IsingProblem, schedule: AnnealingSchedule, s, guard=DENSE_GUARD):
    """Dense real-symmetric ``H(s)``."""
    n = problem.n_qubits
    if n > guard:
        raise CapacityError(f"{n} qubits exceeds dense guard {guard}")
    A, B = float(schedule.A(s)), float(schedule.B(s))
    return -A * transverse_operator(n) + np.diag(B * problem.diagonal_energies())


def _pieces(problem):
    return -transverse_operator(problem.n_qubits), problem.diagonal_energies()


@dataclass(frozen=True)
class AnnealRun:
    """One closed-system anneal.

    ``initial_state`` is ``'ground'`` (ground state of ``H(0)``), ``'plus'``
    (``|+...+>``) or an explicit amplitude vector.
    """

    problem: IsingProblem
    schedule: AnnealingSchedule
    t_a: float
    tau: float = DEFAULT_TAU
    initial_state: object = "ground"
    method: str = "auto"
    sample_s: tuple = ()

    def __post_init__(self):
        if not self.t_a > 0:
            raise ValidationError("t_a must be positive")
        if not 0 < self.tau <= self.t_a:
            raise ValidationError("tau must satisfy 0 < tau <= t_a")
        if self.method not in ("auto", "exact", "trotter"):
            raise ValidationError(f"unknown method {self.method!r}")
        if isinstance(self.initial_state, str) and self.initial_state not in ("ground", "plus"):
            raise ValidationError(f"unknown initial state policy {self.initial_state!r}")

    @property
    def n_steps(self):
        return max(1, int(round(self.t_a / self.tau)))


@dataclass
class AnnealResult:
    final: np.ndarray
    samples: dict = field(default_factory=dict)
    n_steps: int = 0
    tau: float = 0.0

    def probabilities(self):
        return np.abs(self.final) ** 2


def initial_state(problem, schedule, policy="ground"):
    n = problem.n_qubits
    if isinstance(policy, str):
        if policy == "plus":
            return np.full(2**n, 2 ** (-n / 2), dtype=complex)
        _, vecs = np.linalg.eigh(hamiltonian_at(problem, schedule, 0.0))
        psi = vecs[:, 0].astype(complex)
        # fix the sign so that the overlap with |+...+> is non-negative
        if psi.real.sum() < 0:
            psi = -psi
        return psi
    psi = np.array(policy, dtype=complex)
    if psi.shape != (2**n,):
        raise ValidationError(f"initial state must have length {2**n}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1) > 1e-10:
        raise ValidationError("initial state is not normalized")
    return psi


@numba.njit(cache=True)
def _apply_chain(U, psi):
    dim = psi.shape[0]
    tmp = np.empty(dim, dtype=np.complex128)
    for k in range(U.shape[0]):
        for i in range(dim):
            acc = 0j
            for j in range(dim):
                acc += U[k, i, j] * psi[j]
            tmp[i] = acc
        for i in range(dim):
            psi[i] = tmp[i]
    return psi


@numba.njit(cache=True)
def _trotter_steps(psi, diag, a, b, tau, n):
    # exp(-i tau/2 b D) prod_k exp(i tau a sx_k) exp(-i tau/2 b D), midpoint a, b
    dim = psi.shape[0]
    for k in range(a.shape[0]):
        half = np.exp(-0.5j * tau * b[k] * diag)
        for i in range(dim):
            psi[i] *= half[i]
        c = np.cos(tau * a[k])
        sn = 1j * np.sin(tau * a[k])
        for q in range(n):
            bit = 1 << (n - 1 - q)
            for i in range(dim):
                if i & bit == 0:
                    x0 = psi[i]
                    x1 = psi[i | bit]
                    psi[i] = c * x0 + sn * x1
                    psi[i | bit] = sn * x0 + c * x1
        for i in range(dim):
            psi[i] *= half[i]
    return psi


def _segment(psi, X, diag, a, b, tau, method, n):
    if method == "exact":
        for start in range(0, len(a), _CHUNK):
            aa, bb = a[start:start + _CHUNK], b[start:start + _CHUNK]
            H = aa[:, None, None] * X + bb[:, None, None] * np.diag(diag)
            w, V = np.linalg.eigh(H)
            U = np.einsum("nij,nj,nkj->nik", V, np.exp(-1j * tau * w), V.conj())
            psi = _apply_chain(np.ascontiguousarray(U), psi)
        return psi
    return _trotter_steps(psi, diag, a, b, tau, n)


def evolve(run: AnnealRun) -> AnnealResult:
    """Integrate the Schrödinger equation over ``s`` in ``[0, 1]``.

    Each step applies ``exp(-i tau H(t + tau/2))``: exactly (batched
    diagonalization) for few qubits, otherwise by the symmetric product
    formula that splits the diagonal Ising part from the transverse field.
    States at the step boundaries nearest to ``run.sample_s`` are returned in
    ``samples``.
    """
    problem, sched = run.problem, run.schedule
    n = problem.n_qubits
    method = run.method
    if method == "auto":
        method = "exact" if n <= EXACT_STEP_MAX_QUBITS else "trotter"
    nsteps = run.n_steps
    tau = run.t_a / nsteps
    smid = (np.arange(nsteps) + 0.5) / nsteps
    a, b = sched.A(smid), sched.B(smid)
    X = -transverse_operator(n) if method == "exact" else None
    diag = problem.diagonal_energies()
    psi = initial_state(problem, sched, run.initial_state).copy()
    marks = sorted({int(round(float(s) * nsteps)) for s in run.sample_s})
    samples = {}
    pos = 0
    for mark in marks + [nsteps]:
        if mark > pos:
            psi = _segment(psi, X, diag, a[pos:mark], b[pos:mark], tau, method, n)
            pos = mark
        if mark in marks:
            samples[mark / nsteps] = psi.copy()
    return AnnealResult(psi, samples, nsteps, tau)


def success_probability(final, ground) -> float:
    """Total weight of ``final`` on the configurations in ``ground``."""
    ground = list(ground)
    if not ground:
        raise ValidationError("ground set is empty")
    final = np.asarray(final)
    return float(sum(abs(final[config_index(c)]) ** 2 for c in ground))


def anneal_success(problem, schedule, t_a, tau=DEFAULT_TAU, initial="ground") -> float:
    res = evolve(AnnealRun(problem, schedule, t_a, tau, initial))
    return success_probability(res.final, ground_states(problem))


def instantaneous_spectrum(problem, schedule, s_grid) -> np.ndarray:
    """Sorted eigenvalues of ``H(s)`` for each ``s`` in ``s_grid``; shape ``(len(s), 2**n)``."""
    if problem.n_qubits > DENSE_GUARD:
        raise CapacityError(f"{problem.n_qubits} qubits exceeds dense guard {DENSE_GUARD}")
    X, diag = _pieces(problem)
    s = np.atleast_1d(np.asarray(s_grid, dtype=float))
    A, B = schedule.A(s), schedule.B(s)
    H = A[:, None, None] * X + B[:, None, None] * np.diag(diag)
    return np.linalg.eigvalsh(H)


def _gap(problem, schedule, s):
    E = instantaneous_spectrum(problem, schedule, [s])[0]
    return E[1] - E[0]


def minimal_gap(problem, schedule, n_scan=2001):
    """``min_s E_1(s) - E_0(s)`` and its location.

    The scan grid includes every schedule sample; the best grid point is
    refined by bounded scalar minimization between its neighbours.
    """
    s = np.union1d(np.linspace(0, 1, n_scan), schedule.s)
    E = instantaneous_spectrum(problem, schedule, s)
    gaps = E[:, 1] - E[:, 0]
    i = int(np.argmin(gaps))
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, len(s) - 1)]
    best_s, best = float(s[i]), float(gaps[i])
    if hi > lo:
        res = optimize.minimize_scalar(lambda x: _gap(problem, schedule, x), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-10})
        if res.fun < best:
            best_s, best = float(res.x), float(res.fun)
    return best, best_s


@dataclass(frozen=True)
class AdiabaticResult:
    value: float
    s_max: float
    degenerate: bool = False


def adiabatic_criterion(problem, schedule, j=1, s_grid=None, tol=DEGENERACY_TOL) -> AdiabaticResult:
    """``max_s |<E_j| dH/ds |E_0>| / (E_j - E_0)^2`` on a scan grid.

    ``dH/ds`` uses centered differences of the sample table with step equal
    to half the smallest sample spacing.  A gap below ``tol`` flags the
    result as degenerate instead of raising.
    """
    if s_grid is None:
        s_grid = np.linspace(0, 1, 1001)
    s = np.asarray(s_grid, dtype=float)
    X, diag = _pieces(problem)
    A, B = schedule.A(s), schedule.B(s)
    dA, dB = schedule.derivative(s)
    H = A[:, None, None] * X + B[:, None, None] * np.diag(diag)
    w, V = np.linalg.eigh(H)
    dH = dA[:, None, None] * X + dB[:, None, None] * np.diag(diag)
    num = np.abs(np.einsum("ni,nij,nj->n", V[:, :, j].conj(), dH, V[:, :, 0]))
    gap = w[:, j] - w[:, 0]
    if np.any(gap < tol):
        k = int(np.argmin(gap))
        return AdiabaticResult(float("inf"), float(s[k]), True)
    ratio = num / gap**2
    k = int(np.argmax(ratio))
    return AdiabaticResult(float(ratio[k]), float(s[k]), False)
