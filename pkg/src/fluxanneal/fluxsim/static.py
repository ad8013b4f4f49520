"""Fixed-``s`` circuit runs used to read off the effective coupling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateFitError
from ..estimate import FitSeries, effective_mutual_inductance, fit_static_coupling, static_window
from .device import DeviceParams, derive_circuit, map_J_to_phi
from .observables import embed_computational, project_computational, qubit_frames, static_expectations
from .propagator import CircuitModel, FluxControls, FluxState, build_step_plan, coupler_ground, evolve_frozen


@dataclass
class StaticSeries:
    J: float
    phi_J: float
    times: np.ndarray
    rhos: np.ndarray
    leakage: np.ndarray
    frame: object
    model: CircuitModel

    def expectation(self, alpha, beta):
        return static_expectations(self.rhos, [(alpha, beta)])[:, 0]


def static_run(params: DeviceParams, J, phi_J, duration, tau=5e-5, n_samples=60, variant="tilde",
               qubit_grid=None, coupler_grid=None) -> StaticSeries:
    """Evolve ``|++> (x) coupler ground`` with every control frozen (``phi_i^x = 0``).

    ``rho_comp`` is sampled ``n_samples`` times (plus ``t = 0``) over
    ``duration`` ns.
    """
    kw = {}
    if qubit_grid is not None:
        kw["qubit_grid"] = qubit_grid
    if coupler_grid is not None:
        kw["coupler_grid"] = coupler_grid
    model = CircuitModel(params, map_J_to_phi(params, J), **kw)
    plan = build_step_plan(model, FluxControls.frozen(phi_J))
    f1, f2 = qubit_frames(model, phi_J, variant)
    psi = embed_computational(model, f1, f2, np.full(4, 0.5), coupler_ground(model))
    nsteps = max(n_samples, int(round(duration / tau)))
    every = max(1, nsteps // n_samples)
    nsteps = every * n_samples
    times, rhos, leaks = [], [], []

    def observer(t, st):
        rho, leak = project_computational(st, f1, f2)
        times.append(t)
        rhos.append(rho)
        leaks.append(leak)

    evolve_frozen(plan, FluxState(psi, 1.0), 1.0, nsteps * (duration / nsteps), duration / nsteps,
                  observe_every=every, observer=observer)
    return StaticSeries(J, phi_J, np.array(times), np.array(rhos), np.array(leaks), f1, model)


@dataclass(frozen=True)
class CouplingEstimate:
    J: float
    C: float
    M_eff: float
    M_line: float
    residual_rms: float
    max_leakage: float


def estimate_coupling(params: DeviceParams, J, phi_J, B1, tau=5e-5, n_samples=60, variant="tilde",
                      qubit_grid=None, coupler_grid=None, min_J=0.5) -> CouplingEstimate:
    """Fit ``<sy_1 sz_2>(t) = sin(2 C t)`` from a frozen run and convert ``C`` to ``M_eff`` in pH.

    The window covers 1.5 periods of the predicted ``C = -J B1``; for
    ``|J| < min_J`` the window of ``|J| = min_J`` is used.  A flat series
    means no coupling and gives ``C = 0``.
    """
    duration = static_window(max(abs(J), min_J), B1)
    run = static_run(params, J, phi_J, duration, tau, n_samples, variant, qubit_grid, coupler_grid)
    derived = derive_circuit(params)
    try:
        # normalize by the computational trace so leakage does not damp the sine
        trace = np.real(np.trace(run.rhos, axis1=1, axis2=2))
        fit = fit_static_coupling(FitSeries(run.times, run.expectation("y", "z") / trace, "yz_sine"))
        C, rms = fit.C, fit.residual_rms
    except DegenerateFitError:
        C, rms = 0.0, 0.0
    M = effective_mutual_inductance(C, run.frame, derived)
    return CouplingEstimate(float(J), float(C), M, float(J * derived.M_eff_line_slope), rms,
                            float(run.leakage.max()))
