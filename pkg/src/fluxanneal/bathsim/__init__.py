"""Two qubits coupled to finite spin baths."""

from .anneal import (
    BathAnnealResult,
    BathStepPlan,
    SweepRow,
    anneal_with_bath,
    beta_sweep,
    build_total_hamiltonian,
    gibbs_reference,
    reduced_density_matrix,
    workers_from_env,
)
from .register import bath_hamiltonian
from .spec import BETA_STAR, BathCouplings, SpinBathSpec
from .thermal import ThermalState, initial_bath_state, random_hypersphere_state, thermal_project, trace_estimate

__all__ = [
    "BETA_STAR", "BathAnnealResult", "BathCouplings", "BathStepPlan", "SpinBathSpec", "SweepRow",
    "ThermalState", "anneal_with_bath", "bath_hamiltonian", "beta_sweep", "build_total_hamiltonian",
    "gibbs_reference", "initial_bath_state", "random_hypersphere_state", "reduced_density_matrix",
    "thermal_project", "trace_estimate", "workers_from_env",
]
