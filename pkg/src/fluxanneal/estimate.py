"""Recover effective two-level parameters from simulated expectation values.

Two model shapes are supported:

``yz_sine``
    ``<sy_1 sz_2>(t) = sin(2 C t)``, valid for ``H = C sz_1 sz_2`` started in ``|++>``.
``zz_rabi``
    ``2 Delta C sin^2(W t) / W^2`` with ``W = sqrt(Delta^2 + C^2)``.

Fits use Levenberg-Marquardt least squares from several starting points
seeded by the dominant FFT frequencies of the series.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DegenerateFitError, SingularFrameError, ValidationError

FLAT_TOL = 1e-6
MIN_SAMPLES = 8
P_TOL = 1e-9


class FitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FitSeries:
    times: np.ndarray
    values: np.ndarray
    which: str

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if self.which not in ("yz_sine", "zz_rabi"):
            raise ValidationError(f"unknown series kind {self.which!r}")
        if t.shape != v.shape or t.ndim != 1:
            raise ValidationError("times and values must be 1-d arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("times must be strictly increasing")
        if np.any(np.abs(v) > 1 + 1e-9):
            raise ValidationError("expectation values must lie in [-1, 1]")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class FitResult:
    C: float
    Delta: float | None
    residual_rms: float
    covariance_diag: tuple
    n_samples: int


def yz_model(t, C):
    return np.sin(2 * C * np.asarray(t))


def zz_model(t, Delta, C):
    W2 = Delta**2 + C**2
    if W2 == 0:
        return np.zeros_like(np.asarray(t, dtype=float))
    return 2 * Delta * C * np.sin(np.sqrt(W2) * np.asarray(t)) ** 2 / W2


def _fft_frequencies(t, v, k=3):
    """Angular frequencies of the ``k`` strongest FFT peaks (uniform resampling)."""
    n = max(len(t), 64) * 4
    grid = np.linspace(t[0], t[-1], len(t))
    vv = np.interp(grid, t, v)
    spec = np.abs(np.fft.rfft(vv - vv.mean(), n=n))
    freq = np.fft.rfftfreq(n, d=grid[1] - grid[0]) * 2 * np.pi
    order = np.argsort(spec[1:])[::-1] + 1
    return [float(freq[i]) for i in order[:k]]


def _finish(res, n_params, n):
    r = res.fun
    rms = float(np.sqrt(np.mean(r**2)))
    dof = max(n - n_params, 1)
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * (r @ r) / dof
        diag = tuple(float(x) for x in np.diag(cov))
    except np.linalg.LinAlgError:
        diag = (float("inf"),) * n_params
    return rms, diag


def _check(series, kind):
    if series.which != kind:
        raise ValidationError(f"expected a {kind} series, got {series.which}")
    if len(series.times) < MIN_SAMPLES:
        raise ValidationError(f"need at least {MIN_SAMPLES} samples")
    if np.max(np.abs(series.values)) < FLAT_TOL:
        raise DegenerateFitError("series is flat; it carries no information on the coupling")


def fit_static_coupling(series: FitSeries) -> FitResult:
    """Least-squares ``C`` of ``sin(2 C t)``; the sign follows the initial slope."""
    _check(series, "yz_sine")
    t, v = series.times, series.values
    slope = np.sign(np.polyfit(t[:4], v[:4], 1)[0]) or 1.0
    starts = [w / 2 for w in _fft_frequencies(t, v)]
    # small-angle start from the first samples
    k = max(2, len(t) // 8)
    starts.append(abs(np.polyfit(t[:k], v[:k], 1)[0]) / 2)
    best = None
    for c0 in starts:
        if not np.isfinite(c0) or c0 == 0:
            continue
        res = optimize.least_squares(lambda p: yz_model(t, p[0]) - v, [slope * c0], method="lm",
                                     xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if best is None or res.cost < best.cost:
            best = res
    if best is None:
        raise DegenerateFitError("no usable starting frequency")
    C = float(best.x[0])
    if t[-1] - t[0] < np.pi / (2 * abs(C)):
        warnings.warn("series spans less than half a period of sin(2Ct)", FitWarning, stacklevel=2)
    rms, diag = _finish(best, 1, len(t))
    return FitResult(C, None, rms, diag, len(t))


def _split_amplitude(W, a):
    """``(Delta, C)`` from frequency ``W`` and peak ``a = 2 Delta C / W^2``."""
    a = float(np.clip(a, -1.0, 1.0))
    sp, sm = np.sqrt(1 + abs(a)), np.sqrt(1 - abs(a))
    D, C = 0.5 * W * (sp + sm), 0.5 * W * (sp - sm)
    return D, np.sign(a) * C if a else C


def fit_delta_C(series: FitSeries, larger="delta") -> FitResult:
    """Least-squares ``(Delta, C)`` of the Rabi-type ``zz`` series.

    The model is symmetric under ``Delta <-> C``; ``larger`` ('delta' or 'C')
    selects which parameter takes the larger magnitude.  ``Delta`` is
    reported non-negative and ``C`` carries the sign of the series.
    """
    if larger not in ("delta", "C"):
        raise ValueError("larger must be 'delta' or 'C'")
    _check(series, "zz_rabi")
    t, v = series.times, series.values
    peak = v[np.argmax(np.abs(v))]
    starts = []
    for w2 in _fft_frequencies(t, v, k=4):
        W = w2 / 2
        for scale in (1.0, 0.9, 1.1):
            for a in (peak, 0.5 * peak):
                starts.append(_split_amplitude(W * scale, a))
    best = None
    for D0, C0 in starts:
        if not (np.isfinite(D0) and np.isfinite(C0)) or D0 == 0 or C0 == 0:
            continue
        res = optimize.least_squares(lambda p: zz_model(t, p[0], p[1]) - v, [D0, C0], method="lm",
                                     xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if best is None or res.cost < best.cost:
            best = res
    if best is None:
        raise DegenerateFitError("no usable starting point")
    x0, x1 = best.x
    sign = np.sign(x0 * x1)
    swapped = (abs(x0) >= abs(x1)) != (larger == "delta")
    D, C = (abs(x1), abs(x0)) if swapped else (abs(x0), abs(x1))
    rms, (d0, d1) = _finish(best, 2, len(t))
    var_D, var_C = (d1, d0) if swapped else (d0, d1)
    return FitResult(float(sign * C), float(D), rms, (var_C, var_D), len(t))


def effective_mutual_inductance(C1, frame, derived) -> float:
    """``M_eff = C(1) / I_p^2`` in pH, with ``I_p / 2e = E_L' p`` and ``4 e^2 = 1 / (E_L L)``."""
    if abs(frame.p) < P_TOL:
        raise SingularFrameError(f"persistent-current flux p = {frame.p:.3g} vanishes")
    return float(C1 * derived.E_L * derived.L / (frame.E_L_value**2 * frame.p**2))


def static_window(J, B1, periods=1.5):
    """Duration covering ``periods`` of ``sin(2 C t)`` for the predicted ``C = -J B(1)``."""
    C = abs(J * B1)
    if C == 0:
        return None
    return periods * np.pi / C
