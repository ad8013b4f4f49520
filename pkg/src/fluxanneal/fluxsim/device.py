"""Device parameters and the derived circuit constants of the three-SQUID coupler."""

from __future__ import annotations

import functools
import io
import math
import warnings
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import optimize

from .. import mapping
from ..errors import BracketingError, ConfigError, ParameterError
from ..units import inductance_from_energy

TRUNCATION_RATIO_WARN = 5.0


@dataclass(frozen=True)
class DeviceParams:
    """Circuit energies in rad/ns and the mutual inductance ``M`` in pH.

    Unindexed names belong to the two qubit SQUIDs, the ``0`` suffix to the
    coupler.
    """

    E_C: float
    E_L: float
    E_CJ: float
    E_LJ: float
    E_J: float
    E_C0: float
    E_L0: float
    E_CJ0: float
    E_LJ0: float
    E_J0: float
    M: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "E_J0" and value == 0:
                continue
            if not value > 0:
                raise ParameterError(f"{f.name} must be positive, got {value}")
        for lj, j in (("E_LJ", "E_J"), ("E_LJ0", "E_J0")):
            if getattr(self, j) > 0 and getattr(self, lj) / getattr(self, j) < TRUNCATION_RATIO_WARN:
                warnings.warn(f"{lj}/{j} < {TRUNCATION_RATIO_WARN}: oscillator truncation is questionable")

    @classmethod
    def reference(cls) -> "DeviceParams":
        text = resources.files("fluxanneal").joinpath("data/device_reference.txt").read_text()
        return load_device(io.StringIO(text))

    def replace(self, **changes):
        d = asdict(self)
        d.update(changes)
        return DeviceParams(**d)

    def to_text(self):
        return "".join(f"{f.name} = {getattr(self, f.name)!r}\n" for f in fields(self))


def load_device(source) -> DeviceParams:
    """Read ``key = value`` lines (``#`` comments allowed) into :class:`DeviceParams`."""
    if isinstance(source, (str, Path)):
        try:
            source = open(source)
        except OSError as exc:
            raise ConfigError(f"cannot read device file: {exc}") from None
    values = {}
    with source:
        for lineno, line in enumerate(source, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"device file line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                values[key] = float(value)
            except ValueError:
                raise ConfigError(f"device file line {lineno}: bad number {value!r}") from None
    names = {f.name for f in fields(DeviceParams)}
    missing, extra = names - values.keys(), values.keys() - names
    if missing or extra:
        raise ConfigError(f"device file: missing {sorted(missing)}, unknown {sorted(extra)}")
    return DeviceParams(**values)


@dataclass(frozen=True)
class CircuitDerived:
    """Constants derived from :class:`DeviceParams` at a given coupler bias ``phi_J0x``.

    Inductances are in pH.  ``c`` is the small ratio ``M^2 / (L L_eff)``.
    """

    phi_J0x: float
    E_L: float
    L: float
    L_0: float
    L_eff: float
    E_L_eff: float
    c: float
    phi_J0_expect: float
    beta_eff: float
    E_L_tilde: float
    gamma: float
    phi_crit: float

    @property
    def coupling_ratio(self):
        return float(mapping.coupling_ratio(self.beta_eff, self.c))

    @property
    def M_eff_line_slope(self):
        """Slope ``-gamma M^2 / L_eff`` (pH per unit J) of the predicted effective mutual inductance."""
        return -self.gamma * self.c * self.L


@functools.lru_cache(maxsize=64)
def _static(params: DeviceParams):
    L = inductance_from_energy(params.E_L)
    L0 = inductance_from_energy(params.E_L0)
    L_eff = L0 - 2 * params.M**2 / L
    if L_eff <= 0:
        raise ParameterError(f"effective coupler inductance L_eff = {L_eff:.4g} pH is not positive")
    E_L_eff = params.E_L0 * L0 / L_eff
    c = params.M**2 / (L * L_eff)
    beta = functools.partial(mapping.beta_eff, E_J0=params.E_J0, E_LJ0=params.E_LJ0, E_L_eff=E_L_eff)
    # edge of the stable branch, where the coupler loses stiffness (1 + beta_eff = 0)
    if 1 + beta(math.pi * 2) > 0:
        phi_crit = 2 * math.pi
    else:
        phi_crit = optimize.brentq(lambda x: 1 + beta(x), math.pi, 2 * math.pi, xtol=1e-14)
    if params.E_J0 == 0:
        gamma = 0.0
    else:
        neg = lambda x: -mapping.coupling_ratio(beta(x), c)
        half = 0.5 * phi_crit
        res = optimize.minimize_scalar(neg, bracket=(-half, 0.1 * half, half), method="golden",
                                       options={"xtol": 1e-10})
        gamma = float(-res.fun)
    return L, L0, L_eff, E_L_eff, c, phi_crit, gamma


def derive_circuit(params: DeviceParams, phi_J0x: float = 0.0) -> CircuitDerived:
    """Inductances, screening parameter, ``E_L_tilde`` and ``gamma`` at coupler bias ``phi_J0x``.

    ``gamma`` is the maximum of the coupling ratio over the stable branch
    ``|phi_J0x| < phi_crit`` on which ``1 + beta_eff > 0``.

    Examples
    --------
    >>> d = derive_circuit(DeviceParams.reference(), math.pi)
    >>> round(d.phi_J0_expect, 4)
    3.1152
    """
    L, L0, L_eff, E_L_eff, c, phi_crit, gamma = _static(params)
    expect = float(mapping.coupler_phase(phi_J0x, params.E_J0, params.E_LJ0))
    beta = float(params.E_J0 / E_L_eff * math.cos(expect / 2))
    E_L_tilde = params.E_L * float(mapping.tilde_factor(beta, c))
    return CircuitDerived(float(phi_J0x), params.E_L, L, L0, L_eff, E_L_eff, c, expect, beta,
                          E_L_tilde, gamma, phi_crit)


def map_J_to_phi(params: DeviceParams, J: float) -> float:
    """Coupler bias ``phi_J0x`` in ``[0, phi_crit)`` realizing coupling ``J``.

    Solves ``coupling_ratio(phi) = -J gamma`` by bisection; the ratio falls
    monotonically from ``gamma`` at ``phi = 0``.
    """
    if not -1.0 <= J <= 1.0:
        raise ValueError(f"J = {J} outside [-1, 1]")
    d0 = derive_circuit(params, 0.0)
    gamma, c, phi_crit = d0.gamma, d0.c, d0.phi_crit
    if gamma <= 0:
        raise BracketingError("coupler has no tunable range (gamma = 0)")

    def f(x):
        return derive_circuit(params, x).coupling_ratio + J * gamma

    tol = 1e-10 * gamma
    if abs(f(0.0)) <= tol:
        return 0.0
    hi = 0.5 * phi_crit
    while f(hi) > 0:
        hi = 0.5 * (hi + phi_crit)
        if phi_crit - hi < 1e-12:
            raise BracketingError(f"no sign change for J = {J} below phi_crit = {phi_crit:.6f}")
    if f(0.0) < 0:
        raise BracketingError(f"J = {J} is beyond the coupler maximum")
    root = optimize.bisect(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(f(root)) > tol:
        raise BracketingError(f"bisection residual {f(root):.3g} exceeds tolerance")
    return float(root)


def phi_x_for_h(params: DeviceParams, derived: CircuitDerived, h, p_s):
    """Qubit bias flux ``h gamma (E_L_tilde / E_L) c p(s)`` for field ``h``.

    ``p_s`` is the persistent-current flux ``<up|phi|up>`` of the frame.
    """
    return np.asarray(h) * derived.gamma * derived.E_L_tilde / params.E_L * derived.c * np.asarray(p_s)
