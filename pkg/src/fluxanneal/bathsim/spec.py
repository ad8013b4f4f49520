"""Spin-bath specifications and their seeded random coupling tables."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError

BETA_STAR = 0.588


@dataclass(frozen=True)
class BathCouplings:
    """Random numbers of one bath realization; all entries lie in ``[-1, 1]``.

    ``bath`` has one ``(x, y, z)`` row per ring bond (model I) or per site
    (model II).  ``system`` has one row per system-bath link and ``links``
    lists the ``(qubit, bath site)`` pairs of those rows.
    """

    bath: np.ndarray
    system: np.ndarray
    links: tuple


@dataclass(frozen=True)
class SpinBathSpec:
    """Model, size and energy scales of a spin bath.

    Parameters
    ----------
    model : {'I', 'II'}
        'I' is a ring with random ``xx + yy + zz`` bonds of scale ``K`` and one
        random bath site per qubit; 'II' is a set of free spins of scale
        ``Omega`` where each qubit couples to one half of the bath.
    energy : float
        ``K`` (model I) or ``Omega`` (model II) in rad/ns.
    lam : float
        System-bath strength ``lambda`` in rad/ns.
    beta : float
        Inverse bath temperature in ns.
    """

    model: str
    n_bath: int
    energy: float
    lam: float
    beta: float = BETA_STAR
    seed: int = 0
    couplings: BathCouplings = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.model not in ("I", "II"):
            raise ValidationError(f"model must be 'I' or 'II', got {self.model!r}")
        if self.model == "I" and self.n_bath < 2:
            raise ValidationError("model I needs at least two bath spins")
        if self.model == "II" and (self.n_bath < 2 or self.n_bath % 2):
            raise ValidationError("model II needs an even number of bath spins")
        if self.beta < 0:
            raise ValidationError("beta must be non-negative")
        object.__setattr__(self, "couplings", generate_couplings(self))

    @property
    def seeds(self):
        """Independent child seeds for the coupling table and the random state."""
        return np.random.SeedSequence(self.seed).spawn(2)

    def with_(self, **changes):
        d = dict(model=self.model, n_bath=self.n_bath, energy=self.energy, lam=self.lam, beta=self.beta,
                 seed=self.seed)
        d.update(changes)
        return SpinBathSpec(**d)

    def metadata(self):
        c = self.couplings
        return {"model": self.model, "n_bath": self.n_bath, "energy": self.energy, "lambda": self.lam,
                "beta": self.beta, "seed": self.seed, "links": [list(map(int, x)) for x in c.links]}


def generate_couplings(spec: SpinBathSpec) -> BathCouplings:
    rng = np.random.default_rng(spec.seeds[0])
    n = spec.n_bath
    bath = rng.uniform(-1.0, 1.0, size=(n, 3))
    if spec.model == "I":
        sites = rng.choice(n, size=2, replace=False)
        links = ((0, int(sites[0])), (1, int(sites[1])))
        system = rng.uniform(-1.0, 1.0, size=(2, 3))
    else:
        half = n // 2
        links = tuple((0, k) for k in range(half)) + tuple((1, k) for k in range(half, n))
        system = rng.uniform(-1.0, 1.0, size=(n, 3))
    bath.setflags(write=False)
    system.setflags(write=False)
    return BathCouplings(bath, system, links)
