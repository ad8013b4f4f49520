"""Unit conventions.

All energies are angular frequencies in rad/ns (hbar = 1), so a phase is
``energy * time`` with time in ns.  Inductances are in pH.  The conversion
between an inductive energy and its inductance is ``E_L = hbar / (4 e^2 L)``.
"""

from scipy import constants as _c

HBAR = _c.hbar
ELEMENTARY_CHARGE = _c.e
K_B = _c.k

#: energy in rad/ns -> joules
ENERGY_TO_JOULE = HBAR * 1e9


def inductance_from_energy(energy):
    """Inductance in pH of a loop with inductive energy ``energy`` (rad/ns)."""
    return HBAR / (4.0 * ELEMENTARY_CHARGE**2 * energy * 1e9) * 1e12


def energy_from_inductance(inductance_ph):
    """Inverse of :func:`inductance_from_energy`."""
    return HBAR / (4.0 * ELEMENTARY_CHARGE**2 * inductance_ph * 1e-12) / 1e9


def temperature_from_beta(beta_ns):
    """Temperature in K for an inverse temperature given in ns (hbar = k_B = 1)."""
    return HBAR / (K_B * beta_ns * 1e-9)
