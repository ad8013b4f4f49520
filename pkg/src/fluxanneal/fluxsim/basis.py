"""Discretization: uniform main-loop flux grids and the truncated CJJ oscillator basis."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss, hermval

QUADRATURE_NODES = 80


@dataclass(frozen=True)
class FluxGrid:
    """``n`` equally spaced flux values on ``[lo, hi]`` with Dirichlet ends."""

    n: int
    lo: float
    hi: float

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("grid needs at least 3 points")
        if not self.hi > self.lo:
            raise ValueError("grid range must be increasing")

    @property
    def spacing(self):
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def points(self):
        return np.linspace(self.lo, self.hi, self.n)

    def kinetic(self, E_C):
        """Dense ``-E_C d^2/dphi^2`` with 3-point differences."""
        d2 = E_C / self.spacing**2
        return d2 * (2 * np.eye(self.n) - np.eye(self.n, k=1) - np.eye(self.n, k=-1))


QUBIT_GRID = FluxGrid(47, -2.0, 2.0)
COUPLER_GRID = FluxGrid(31, -1.0, 1.0)
DESK_QUBIT_GRID = FluxGrid(31, -2.0, 2.0)
DESK_COUPLER_GRID = FluxGrid(21, -1.0, 1.0)


@dataclass(frozen=True)
class CjjBasis:
    """Lowest ``truncation`` eigenstates of the CJJ oscillator ``E_CJ, E_LJ``.

    The oscillator is centered at the instantaneous control flux, so the
    ``E_LJ (phi_J - phi_J^x)^2 / 2`` term stays diagonal with level spacing
    ``omega = sqrt(2 E_CJ E_LJ)``.
    """

    E_CJ: float
    E_LJ: float
    truncation: int = 3

    def __post_init__(self):
        if self.truncation < 2:
            raise ValueError("truncation must be at least 2")

    @property
    def omega(self):
        return math.sqrt(2 * self.E_CJ * self.E_LJ)

    @property
    def length(self):
        """Oscillator length ``x_s`` with ``x_s^2 = sqrt(2 E_CJ / E_LJ)``."""
        return math.sqrt(math.sqrt(2 * self.E_CJ / self.E_LJ))

    def levels(self):
        """Diagonal energies ``omega m``; the zero-point shift is dropped."""
        return self.omega * np.arange(self.truncation)

    def cos_half(self, center):
        """Matrix of ``cos(phi_J / 2)`` for the basis centered at ``center``."""
        return _cos_half(self.E_CJ, self.E_LJ, self.truncation, float(center))

    def momentum(self):
        """Matrix of ``-i d/dphi_J`` (Hermitian, purely imaginary)."""
        n = self.truncation
        a = np.diag(np.sqrt(np.arange(1, n)), k=1)
        return 1j * (a.T - a) / (math.sqrt(2) * self.length)

    def position(self):
        """Matrix of ``phi_J - center``."""
        n = self.truncation
        a = np.diag(np.sqrt(np.arange(1, n)), k=1)
        return (a + a.T) * self.length / math.sqrt(2)


@functools.lru_cache(maxsize=4096)
def _cos_half(E_CJ, E_LJ, n, center):
    xs = math.sqrt(math.sqrt(2 * E_CJ / E_LJ))
    y, w = hermgauss(QUADRATURE_NODES)
    herm = np.array([
        hermval(y, [0] * m + [1]) / math.sqrt(2**m * math.factorial(m) * math.sqrt(math.pi))
        for m in range(n)
    ])
    f = np.cos((center + xs * y) / 2)
    out = (herm * (w * f)) @ herm.T
    out = 0.5 * (out + out.T)
    out.setflags(write=False)
    return out
