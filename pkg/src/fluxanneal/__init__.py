"""Quantum-annealing simulation from the rf-SQUID circuit down to the Ising qubit model."""

__version__ = "0.1.0"

from .problem import (
    AnnealingSchedule,
    CatalogEntry,
    ControlSchedule,
    IsingProblem,
    gibbs_probability,
    ground_states,
    ising_energy,
    load_catalog,
    load_schedule,
)

__all__ = [
    "AnnealingSchedule",
    "CatalogEntry",
    "ControlSchedule",
    "IsingProblem",
    "gibbs_probability",
    "ground_states",
    "ising_energy",
    "load_catalog",
    "load_schedule",
]
