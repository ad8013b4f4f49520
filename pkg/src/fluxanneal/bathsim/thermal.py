"""Random states, imaginary-time thermal projection and trace estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError, ValidationError
from .register import apply_gate, bath_hamiltonian, bath_terms, term_gates
from .spec import SpinBathSpec

MAX_DELTA = 0.01
ENERGY_RTOL = 1e-8
MAX_DOUBLINGS = 16


def random_hypersphere_state(dim, seed) -> np.ndarray:
    """Uniform random unit vector in ``C^dim`` (normalized complex Gaussian)."""
    dim = int(dim)
    if dim < 1 or dim & (dim - 1):
        raise ValidationError(f"dimension must be a power of two, got {dim}")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class ThermalState:
    """``|Phi(beta)>`` plus the log of ``<Phi| exp(-beta H_B) |Phi>``."""

    amplitudes: np.ndarray
    beta: float
    log_weight: float
    energy: float
    n_steps: int

    @property
    def dimension(self):
        return self.amplitudes.shape[0]

    def partition_estimate(self):
        """Typicality estimate of ``Tr exp(-beta H_B)``."""
        return self.dimension * np.exp(self.log_weight)


def _project(phi, gates, n_sites, n_steps):
    psi = phi.copy()
    log_w = 0.0
    for _ in range(n_steps):
        for sites, U in gates:
            apply_gate(psi, sites, U, n_sites)
        for sites, U in reversed(gates):
            apply_gate(psi, sites, U, n_sites)
        nrm = np.linalg.norm(psi)
        if not np.isfinite(nrm) or nrm == 0:
            raise NumericalError("imaginary-time projection under- or overflowed")
        psi /= nrm
        log_w += 2 * np.log(nrm)
    return psi, log_w


def thermal_project(phi, spec: SpinBathSpec, beta=None, rtol=ENERGY_RTOL, H_B=None) -> ThermalState:
    """Apply ``exp(-beta H_B / 2)`` to the bath state ``phi`` and renormalize.

    Symmetric product-formula steps of size ``delta <= MAX_DELTA`` are doubled
    until the bath energy changes by less than ``rtol`` (relative).
    """
    beta = spec.beta if beta is None else float(beta)
    if beta < 0:
        raise ValidationError("beta must be non-negative")
    phi = np.asarray(phi, dtype=complex)
    if phi.shape != (2**spec.n_bath,):
        raise ValidationError(f"bath state must have length 2**{spec.n_bath}")
    H = bath_hamiltonian(spec) if H_B is None else H_B

    def energy(v):
        return float(np.real(np.vdot(v, H @ v)))

    if beta == 0:
        return ThermalState(phi.copy(), beta, float(np.log(np.vdot(phi, phi).real)), energy(phi), 0)
    terms = bath_terms(spec, offset=0)
    n = max(1, int(np.ceil(beta / 2 / MAX_DELTA)))
    prev = None
    for _ in range(MAX_DOUBLINGS):
        delta = beta / 2 / n
        # exp(-delta h / 2) per term; a symmetric sweep covers delta
        gates = term_gates(terms, -0.5j * delta)
        psi, log_w = _project(phi, gates, spec.n_bath, n)
        log_w += np.log(np.vdot(phi, phi).real)
        E = energy(psi)
        if prev is not None and abs(E - prev) <= rtol * max(abs(E), 1e-300):
            return ThermalState(psi, beta, float(log_w), E, n)
        if all(len(s) == 1 for s, _ in terms):
            # commuting single-site terms: the product is exact at any step
            return ThermalState(psi, beta, float(log_w), E, n)
        prev = E
        n *= 2
    raise NumericalError(f"thermal projection did not converge after {MAX_DOUBLINGS} doublings")


def trace_estimate(X, phi) -> float:
    """``D <Phi| X |Phi>`` for a matrix, sparse matrix or callable ``X``."""
    phi = np.asarray(phi)
    Xphi = X(phi) if callable(X) else X @ phi
    return float(np.real(phi.shape[0] * np.vdot(phi, Xphi)))


def initial_bath_state(spec: SpinBathSpec, beta=None) -> ThermalState:
    """Thermal random bath state from the state seed of ``spec``."""
    phi = random_hypersphere_state(2**spec.n_bath, spec.seeds[1])
    return thermal_project(phi, spec, beta)
