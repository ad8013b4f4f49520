"""Packaged schedules: the default CJJ control ramp, its derived scheme, and a hardware-like scheme.

No measured control-flux or hardware ``A(s), B(s)`` tables are available,
so both shipped tables are synthetic:

* ``control_default.csv`` ramps ``phi_J^x`` linearly from 4.10 to the flux at
  which the bare single-SQUID scheme reaches ``B(1) = 35.18`` rad/ns.
* ``hardware_like_schedule.csv`` rescales the derived scheme by
  ``HARDWARE_GAP_RATIO`` along a ramp extended until the rescaled ``B``
  reaches the same final value.  The ratio is the mean of the measured
  hardware minimal gaps over the derived-scheme gaps for the three reference
  problems; the regenerating function is :func:`build_hardware_like_schedule`.
"""

from __future__ import annotations

import functools
from importlib import resources

import numpy as np
from scipy import optimize

from .fluxsim.device import DeviceParams, derive_circuit
from .fluxsim.frame import derive_scheme, single_squid_frame
from .problem import AnnealingSchedule, ControlSchedule, load_schedule

B_FINAL = 35.18
PHI_START = 4.10
HARDWARE_GAP_RATIO = 0.8426
SCHEME_SAMPLES = 201


def _resource(name):
    return resources.files("fluxanneal").joinpath("data", name).read_text()


def default_control() -> ControlSchedule:
    return load_schedule(_resource("control_default.csv"), "control")


@functools.lru_cache(maxsize=16)
def default_scheme(params: DeviceParams | None = None, variant="bare", phi_J0x=None,
                   n_samples=SCHEME_SAMPLES):
    """Scheme derived from :func:`default_control` on ``n_samples`` equally spaced ``s``."""
    params = DeviceParams.reference() if params is None else params
    return derive_scheme(params, default_control(), variant, phi_J0x,
                         s_grid=np.linspace(0.0, 1.0, n_samples))


def hardware_like_schedule() -> AnnealingSchedule:
    return load_schedule(_resource("hardware_like_schedule.csv"), "AB")


def _phi_for_B(params, target, lo=4.3, hi=4.6):
    derived = derive_circuit(params, 0.0)
    f = lambda x: single_squid_frame(params, x).B(derived) - target
    return optimize.brentq(f, lo, hi, xtol=1e-12)


def build_hardware_like_schedule(params: DeviceParams | None = None, ratio=HARDWARE_GAP_RATIO,
                                 B_final=B_FINAL, phi_start=PHI_START, n_samples=SCHEME_SAMPLES):
    """Regenerate the hardware-like table: ``ratio * (A, B)`` of the bare derived scheme."""
    params = DeviceParams.reference() if params is None else params
    phi_end = _phi_for_B(params, B_final / ratio)
    ramp = ControlSchedule([0.0, 1.0], [phi_start, phi_end])
    sched = derive_scheme(params, ramp, s_grid=np.linspace(0.0, 1.0, n_samples)).schedule
    return sched.scaled(ratio), phi_end


def default_control_endpoint(params: DeviceParams | None = None, B_final=B_FINAL):
    """Flux at which the bare derived ``B`` equals ``B_final``; the shipped ramp ends here."""
    params = DeviceParams.reference() if params is None else params
    return _phi_for_B(params, B_final)
