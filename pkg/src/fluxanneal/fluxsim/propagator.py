"""Product-formula propagation of the three-SQUID circuit.

The state is a complex array indexed ``(l0, m0, l1, m1, l2, m2)``: grid
point ``l`` of each main-loop flux and oscillator level ``m`` of each CJJ
loop (coupler first).  The Hamiltonian is split into

* a potential factor, diagonal in every grid index: the scalar part
  ``V(l0, l1, l2)`` holds all inductive and bilinear coupling terms plus the
  diagonal of the finite-difference kinetic operators, and one 3x3 block per
  grid point acts on each oscillator index (level energies, Josephson term,
  and the frame-motion term of the moving oscillator basis);
* per-axis hopping terms of the kinetic operators, split into even and odd
  bonds so that every factor is a set of independent 2x2 rotations.

A step is ``P(tau/2) K(tau) P(tau/2)`` with ``K`` itself a symmetric
even/odd/even sequence, all evaluated at the step midpoint.  Consecutive
half potential factors are fused.  Passing a complex step ``z = -i dtau``
turns every factor into its imaginary-time counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from numpy.polynomial.hermite import hermgauss, hermval

from ..errors import NumericalError
from ..problem import ControlSchedule
from .basis import DESK_COUPLER_GRID, DESK_QUBIT_GRID, QUADRATURE_NODES, CjjBasis, FluxGrid
from .device import CircuitDerived, DeviceParams, derive_circuit


def _centered_trig(basis: CjjBasis):
    """``<m|cos(x/2)|n>`` and ``<m|sin(x/2)|n>`` for ``x = phi_J - center``."""
    n, xs = basis.truncation, basis.length
    y, w = hermgauss(QUADRATURE_NODES)
    herm = np.array([
        hermval(y, [0] * m + [1]) / math.sqrt(2**m * math.factorial(m) * math.sqrt(math.pi))
        for m in range(n)
    ])
    cos_m = (herm * (w * np.cos(xs * y / 2))) @ herm.T
    sin_m = (herm * (w * np.sin(xs * y / 2))) @ herm.T
    return 0.5 * (cos_m + cos_m.T), 0.5 * (sin_m + sin_m.T)


@dataclass(frozen=True)
class CircuitModel:
    """Static description of the discretized three-SQUID circuit at a fixed coupler bias."""

    params: DeviceParams
    phi_J0x: float
    qubit_grid: FluxGrid = DESK_QUBIT_GRID
    coupler_grid: FluxGrid = DESK_COUPLER_GRID
    truncation: int = 3
    derived: CircuitDerived = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "derived", derive_circuit(self.params, self.phi_J0x))

    @property
    def shape(self):
        K = self.truncation
        return (self.coupler_grid.n, K, self.qubit_grid.n, K, self.qubit_grid.n, K)

    @property
    def qubit_basis(self):
        return CjjBasis(self.params.E_CJ, self.params.E_LJ, self.truncation)

    @property
    def coupler_basis(self):
        return CjjBasis(self.params.E_CJ0, self.params.E_LJ0, self.truncation)

    def constants(self):
        """Scalar constants of the grid potential, packed for the kernels."""
        p, d = self.params, self.derived
        hq = p.E_C / self.qubit_grid.spacing**2
        hc = p.E_C0 / self.coupler_grid.spacing**2
        return np.array([
            p.E_L * (1 + d.c),            # qubit inductive energy
            d.E_L_eff,                    # coupler inductive energy
            p.M / d.L_eff * p.E_L,        # qubit-coupler bilinear
            d.c * p.E_L,                  # qubit-qubit bilinear
            2 * (2 * hq) + 2 * hc,        # kinetic diagonal
        ])

    def qubit_blocks(self):
        """``(levels, cos-part, sin-part, momentum)`` so that the qubit block at grid point ``l`` is
        ``diag(levels) - E_J cos(phi_l) (cos(c/2) C - sin(c/2) S) - cdot P``."""
        b = self.qubit_basis
        Cm, Sm = _centered_trig(b)
        return b.levels().astype(complex), Cm.astype(complex), Sm.astype(complex), b.momentum()

    def coupler_block(self):
        """Hermitian ``(n0, K, K)`` array of the (static) coupler oscillator blocks."""
        b = self.coupler_basis
        C0 = b.cos_half(self.phi_J0x)
        cosp = np.cos(self.coupler_grid.points)
        W = np.diag(b.levels())[None] - self.params.E_J0 * cosp[:, None, None] * C0[None]
        return W.astype(complex)


@dataclass(frozen=True)
class FluxControls:
    """Time-dependent external fluxes of a run.

    ``phi_x_table`` holds ``(phi_1^x, phi_2^x)`` sampled on ``control.s``-like
    points ``s_table``; linear interpolation in ``s``.
    """

    control: ControlSchedule
    s_table: np.ndarray
    phi_x_table: np.ndarray

    def phi_J(self, s):
        return self.control.phi(s)

    def phi_x(self, s):
        return (np.interp(s, self.s_table, self.phi_x_table[:, 0]),
                np.interp(s, self.s_table, self.phi_x_table[:, 1]))

    @classmethod
    def frozen(cls, phi_J, phi_x=(0.0, 0.0)):
        ctrl = ControlSchedule([0.0, 1.0], [phi_J, phi_J])
        return cls(ctrl, np.array([0.0, 1.0]), np.array([phi_x, phi_x], dtype=float))


# ---------------------------------------------------------------- kernels


@numba.njit(cache=True)
def _hop(psi3, cz, sz, parity):
    n_out, n, n_in = psi3.shape
    for o in range(n_out):
        for j in range(parity, n - 1, 2):
            for i in range(n_in):
                x0 = psi3[o, j, i]
                x1 = psi3[o, j + 1, i]
                psi3[o, j, i] = cz * x0 + sz * x1
                psi3[o, j + 1, i] = sz * x0 + cz * x1


@numba.njit(cache=True)
def _grid_potential(phi0, phi1, phi2, x1, x2, k):
    """V(l0, l1, l2) for qubit biases x1, x2."""
    n0, n1, n2 = phi0.shape[0], phi1.shape[0], phi2.shape[0]
    V = np.empty((n0, n1, n2))
    for a in range(n0):
        f0 = phi0[a]
        for b in range(n1):
            d1 = phi1[b] - x1
            for c in range(n2):
                d2 = phi2[c] - x2
                V[a, b, c] = (0.5 * k[0] * (d1 * d1 + d2 * d2) + 0.5 * k[1] * f0 * f0
                              + k[2] * (d1 + d2) * f0 + k[3] * d1 * d2 + k[4])
    return V


@numba.njit(cache=True)
def _expm_herm(W, z):
    """exp(-i z W) for Hermitian W and complex z."""
    w, U = np.linalg.eigh(W)
    f = np.exp(-1j * z * w)
    n = W.shape[0]
    out = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            acc = 0j
            for m in range(n):
                acc += U[i, m] * f[m] * np.conj(U[j, m])
            out[i, j] = acc
    return out


@numba.njit(cache=True)
def _qubit_propagators(cosp, levels, Cm, Sm, P, E_J, center_a, cdot_a, za, center_b, cdot_b, zb):
    """exp(-i zb W_b) exp(-i za W_a) for every grid point."""
    n, K = cosp.shape[0], levels.shape[0]
    out = np.empty((n, K, K), dtype=np.complex128)
    ca, sa = math.cos(0.5 * center_a), math.sin(0.5 * center_a)
    cb, sb = math.cos(0.5 * center_b), math.sin(0.5 * center_b)
    for l in range(n):
        Wa = -E_J * cosp[l] * (ca * Cm - sa * Sm) - cdot_a * P
        Wb = -E_J * cosp[l] * (cb * Cm - sb * Sm) - cdot_b * P
        for m in range(K):
            Wa[m, m] += levels[m]
            Wb[m, m] += levels[m]
        Ua = _expm_herm(Wa, za) if za != 0 else np.eye(K, dtype=np.complex128)
        Ub = _expm_herm(Wb, zb) if zb != 0 else np.eye(K, dtype=np.complex128)
        out[l] = Ub @ Ua
    return out


@numba.njit(cache=True)
def _apply_potential(psi, phase, U0, U1, U2):
    n0, K0, n1, K1, n2, K2 = psi.shape
    rest0 = n1 * K1 * n2 * K2
    p0 = psi.reshape(n0, K0, rest0)
    p2 = psi.reshape(n0 * K0, n1, K1, n2, K2)
    buf0 = np.empty((K0, rest0), dtype=np.complex128)
    slab = np.empty((K1, n2, K2), dtype=np.complex128)
    x = np.empty(K2, dtype=np.complex128)
    # coupler oscillator: contiguous rows of length rest0
    for a in range(n0):
        for i in range(K0):
            for r in range(rest0):
                buf0[i, r] = 0j
            for q in range(K0):
                u = U0[a, i, q]
                for r in range(rest0):
                    buf0[i, r] += u * p0[a, q, r]
        for i in range(K0):
            for r in range(rest0):
                p0[a, i, r] = buf0[i, r]
    # both qubit oscillators and the scalar phase, one (l0, m0, l1) slab at a time
    for o in range(n0 * K0):
        a = o // K0
        for b in range(n1):
            for j in range(K1):
                for c in range(n2):
                    for k in range(K2):
                        acc = 0j
                        for q in range(K1):
                            acc += U1[b, j, q] * p2[o, b, q, c, k]
                        slab[j, c, k] = acc
            for j in range(K1):
                for c in range(n2):
                    ph = phase[a, b, c]
                    for k in range(K2):
                        x[k] = slab[j, c, k]
                    for k in range(K2):
                        acc = 0j
                        for q in range(K2):
                            acc += U2[c, k, q] * x[q]
                        p2[o, b, j, c, k] = ph * acc


@numba.njit(cache=True)
def _hop_symmetric(psi3, ch, sh, cf, sf, chunk):
    """even(half) odd(full) even(half) bond rotations along the middle axis."""
    n_out, n, n_in = psi3.shape
    for o in range(n_out):
        for start in range(0, n_in, chunk):
            stop = min(start + chunk, n_in)
            for parity, c, s in ((0, ch, sh), (1, cf, sf), (0, ch, sh)):
                for j in range(parity, n - 1, 2):
                    for i in range(start, stop):
                        x0 = psi3[o, j, i]
                        x1 = psi3[o, j + 1, i]
                        psi3[o, j, i] = c * x0 + s * x1
                        psi3[o, j + 1, i] = s * x0 + c * x1


@numba.njit(cache=True)
def _apply_hamiltonian(psi, V, W0, W1, W2, hc, hq):
    """H psi for the unsplit Hamiltonian (V includes the kinetic diagonal)."""
    n0, K0, n1, K1, n2, K2 = psi.shape
    out = np.zeros_like(psi)
    for a in range(n0):
        for i in range(K0):
            for b in range(n1):
                for j in range(K1):
                    for c in range(n2):
                        for k in range(K2):
                            acc = V[a, b, c] * psi[a, i, b, j, c, k]
                            for q in range(K0):
                                acc += W0[a, i, q] * psi[a, q, b, j, c, k]
                            for q in range(K1):
                                acc += W1[b, j, q] * psi[a, i, b, q, c, k]
                            for q in range(K2):
                                acc += W2[c, k, q] * psi[a, i, b, j, c, q]
                            if a > 0:
                                acc -= hc * psi[a - 1, i, b, j, c, k]
                            if a < n0 - 1:
                                acc -= hc * psi[a + 1, i, b, j, c, k]
                            if b > 0:
                                acc -= hq * psi[a, i, b - 1, j, c, k]
                            if b < n1 - 1:
                                acc -= hq * psi[a, i, b + 1, j, c, k]
                            if c > 0:
                                acc -= hq * psi[a, i, b, j, c - 1, k]
                            if c < n2 - 1:
                                acc -= hq * psi[a, i, b, j, c + 1, k]
                            out[a, i, b, j, c, k] = acc
    return out


# ------------------------------------------------------------ step plan


class StepPlan:
    """Factorized one-step propagator of a :class:`CircuitModel` under :class:`FluxControls`.

    ``t_a`` converts ``s`` to time for the frame-motion term; ``None`` means
    the controls are frozen.
    """

    def __init__(self, model: CircuitModel, controls: FluxControls, t_a=None):
        self.model = model
        self.controls = controls
        self.t_a = t_a
        self.k = model.constants()
        self.phi0 = model.coupler_grid.points
        self.phi1 = model.qubit_grid.points
        self.cosq = np.cos(self.phi1)
        self.levels, self.Cm, self.Sm, self.P = model.qubit_blocks()
        self.W0 = model.coupler_block()
        self.hq = model.params.E_C / model.qubit_grid.spacing**2
        self.hc = model.params.E_C0 / model.coupler_grid.spacing**2
        self._u0_cache = {}

    def factor_names(self):
        return ["potential/2", "hop coupler even/2", "hop coupler odd", "hop coupler even/2",
                "hop qubit1 even/2", "hop qubit1 odd", "hop qubit1 even/2",
                "hop qubit2 even/2", "hop qubit2 odd", "hop qubit2 even/2", "potential/2"]

    def _at(self, s):
        if s is None:
            return None
        x1, x2 = self.controls.phi_x(s)
        center = float(self.controls.phi_J(s))
        cdot = float(self.controls.control.rate(s, self.t_a)) if self.t_a else 0.0
        return float(x1), float(x2), center, cdot

    def _u0(self, z):
        key = complex(z)
        if key not in self._u0_cache:
            self._u0_cache[key] = np.stack([_expm_herm(W, key) for W in self.W0])
        return self._u0_cache[key]

    def potential(self, psi, sa, za, sb=None, zb=0.0):
        """Apply ``exp(-i zb P(sb)) exp(-i za P(sa))`` in place."""
        a = self._at(sa)
        b = self._at(sb) if sb is not None else a
        Va = _grid_potential(self.phi0, self.phi1, self.phi1, a[0], a[1], self.k)
        phase = np.exp(-1j * za * Va)
        if sb is not None and zb != 0:
            Vb = _grid_potential(self.phi0, self.phi1, self.phi1, b[0], b[1], self.k)
            phase *= np.exp(-1j * zb * Vb)
        else:
            zb = 0.0
        U = _qubit_propagators(self.cosq, self.levels, self.Cm, self.Sm, self.P, self.model.params.E_J,
                               a[2], a[3], complex(za), b[2], b[3], complex(zb))
        U0 = self._u0(complex(za) + complex(zb))
        _apply_potential(psi, phase, U0, U, U)

    def kinetic(self, psi, z):
        """Symmetric even/odd hopping sequence on every axis, in place."""
        n0, K0, n1, K1, n2, K2 = psi.shape
        views = ((psi.reshape(1, n0, K0 * n1 * K1 * n2 * K2), self.hc),
                 (psi.reshape(n0 * K0, n1, K1 * n2 * K2), self.hq),
                 (psi.reshape(n0 * K0 * n1 * K1, n2, K2), self.hq))
        for view, h in views:
            # hopping amplitude -h on every bond
            _hop_symmetric(view, np.cos(0.5 * z * h), 1j * np.sin(0.5 * z * h),
                           np.cos(z * h), 1j * np.sin(z * h), 256)

    def hamiltonian_parts(self, s):
        x1, x2, center, cdot = self._at(s)
        V = _grid_potential(self.phi0, self.phi1, self.phi1, x1, x2, self.k)
        ca, sa = math.cos(0.5 * center), math.sin(0.5 * center)
        W = (np.diag(self.levels)[None] - self.model.params.E_J * self.cosq[:, None, None]
             * (ca * self.Cm - sa * self.Sm)[None] - cdot * self.P[None])
        return V, W

    def apply_hamiltonian(self, psi, s):
        V, W = self.hamiltonian_parts(s)
        return _apply_hamiltonian(psi, V, self.W0, W, W, self.hc, self.hq)

    def energy(self, psi, s):
        return float(np.vdot(psi, self.apply_hamiltonian(psi, s)).real / np.vdot(psi, psi).real)

    def step(self, psi, s_mid, z):
        """One unfused symmetric step at midpoint ``s_mid`` with complex step ``z``."""
        self.potential(psi, s_mid, 0.5 * z)
        self.kinetic(psi, z)
        self.potential(psi, s_mid, 0.5 * z)


def build_step_plan(model: CircuitModel, controls: FluxControls, t_a=None) -> StepPlan:
    return StepPlan(model, controls, t_a)


@dataclass
class FluxState:
    """Amplitudes on ``(l0, m0, l1, m1, l2, m2)`` at annealing parameter ``s``."""

    amplitudes: np.ndarray
    s: float = 0.0

    @property
    def norm(self):
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def copy(self):
        return FluxState(self.amplitudes.copy(), self.s)


def evolve_flux(plan: StepPlan, state: FluxState, t_a, tau, observe_s=(), observer=None,
                s_start=0.0, s_stop=1.0):
    """Real-time propagation from ``s_start`` to ``s_stop`` of an anneal of length ``t_a``.

    ``observer(s, state)`` is called with an immutable copy at the step
    boundaries nearest to each value in ``observe_s``.  Consecutive half
    potential factors are fused, so each step costs one potential and one
    kinetic sweep.
    """
    psi = state.amplitudes.copy()
    span = (s_stop - s_start) * t_a
    nsteps = max(1, int(round(span / tau)))
    tau = span / nsteps
    ds = (s_stop - s_start) / nsteps
    marks = {int(round((s - s_start) / ds)) for s in observe_s}
    if observer is not None and 0 in marks:
        observer(s_start, FluxState(psi.copy(), s_start))
    prev = None
    for k in range(nsteps):
        s_mid = s_start + (k + 0.5) * ds
        if prev is None:
            plan.potential(psi, s_mid, 0.5 * tau)
        else:
            plan.potential(psi, prev, 0.5 * tau, s_mid, 0.5 * tau)
        plan.kinetic(psi, tau)
        prev = s_mid
        if (k + 1) in marks and observer is not None:
            # close the step so the observed state is exact to second order
            snap = psi.copy()
            plan.potential(snap, s_mid, 0.5 * tau)
            observer(s_start + (k + 1) * ds, FluxState(snap, s_start + (k + 1) * ds))
    plan.potential(psi, prev, 0.5 * tau)
    return FluxState(psi, s_stop)


def evolve_frozen(plan: StepPlan, state: FluxState, s, duration, tau, observe_every=None, observer=None):
    """Real-time propagation with all controls held at ``s``; ``observer(t, state)`` sampled every
    ``observe_every`` steps (including ``t = 0``)."""
    psi = state.amplitudes.copy()
    nsteps = max(1, int(round(duration / tau)))
    tau = duration / nsteps
    if observer is not None and observe_every:
        observer(0.0, FluxState(psi.copy(), s))
    for k in range(nsteps):
        plan.potential(psi, s, 0.5 * tau) if k == 0 else plan.potential(psi, s, tau)
        plan.kinetic(psi, tau)
        if observer is not None and observe_every and (k + 1) % observe_every == 0:
            snap = psi.copy()
            plan.potential(snap, s, 0.5 * tau)
            observer((k + 1) * tau, FluxState(snap, s))
    plan.potential(psi, s, 0.5 * tau)
    return FluxState(psi, s)


def product_guess(model: CircuitModel, frame1, frame2, coupler):
    """Product state ``coupler (x) frame1 (x) frame2`` from ``(grid, level)`` arrays."""
    psi = np.einsum("ai,bj,ck->aibjck", coupler, frame1, frame2).astype(complex)
    return psi / np.linalg.norm(psi)


def coupler_ground(model: CircuitModel):
    """Ground state of the isolated coupler (``phi_1 = phi_2 = 0``) on its grid."""
    g = model.coupler_grid
    K = model.truncation
    lattice = g.kinetic(model.params.E_C0) + np.diag(0.5 * model.derived.E_L_eff * g.points**2)
    H = np.kron(lattice, np.eye(K)) + np.einsum("ab,aij->aibj", np.eye(g.n), model.coupler_block().real
                                                ).reshape(g.n * K, g.n * K)
    _, U = np.linalg.eigh(H)
    v = U[:, 0]
    return (v if v.sum() >= 0 else -v).reshape(g.n, K)


def ground_state_full(plan: StepPlan, s=0.0, guess=None, dtau=2e-4, tol=1e-10, check_every=20,
                      max_steps=200_000):
    """Imaginary-time projection onto the ground state of ``H(s)``.

    Uses the same factorization with ``z = -i dtau`` and renormalizes after
    every step; stops when the relative energy change between checks is below
    ``tol``.  The step is halved once the first convergence is reached, which
    removes most of the splitting bias.
    """
    if guess is None:
        raise ValueError("an initial guess is required")
    psi = np.array(guess, dtype=complex)
    psi /= np.linalg.norm(psi)
    last = plan.energy(psi, s)
    steps = 0
    for dt in (dtau, 0.25 * dtau):
        z = -1j * dt
        while True:
            for _ in range(check_every):
                plan.step(psi, s, z)
                psi /= np.linalg.norm(psi)
            steps += check_every
            e = plan.energy(psi, s)
            if abs(e - last) <= tol * abs(e):
                last = e
                break
            last = e
            if steps > max_steps:
                raise NumericalError(f"imaginary-time projection not converged after {steps} steps "
                                     f"(last relative change {abs(e - last) / abs(e):.3g})")
    return FluxState(psi, s)
