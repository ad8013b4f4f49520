"""Ising problem instances, annealing schedules and exact classical references.

Conventions
-----------
A spin configuration is a tuple of ``+1``/``-1`` values.  In state vectors the
computational basis is ordered with qubit 0 as the most significant bit and
spin ``+1`` (up) mapped to bit value 0, so basis index 0 is ``(+1, ..., +1)``.
"""

from __future__ import annotations

import csv
import io
import itertools
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, TextIO

import numpy as np

from .errors import CapacityError, DimensionError, ScheduleFormatError, ValidationError

ENUMERATION_GUARD = 24
H_RANGE = 2.0
J_RANGE = 1.0


@dataclass(frozen=True)
class IsingProblem:
    """Fields ``h`` and couplings ``J`` of ``-sum h_k S_k - sum J_jk S_j S_k``.

    ``J`` maps ``(j, k)`` with ``j < k`` to a coupling.  Pairs given as
    ``(k, j)`` are normalized; giving both orders is an error.
    """

    h: tuple
    J: Mapping = field(default_factory=dict)
    allow_out_of_range: bool = False

    def __post_init__(self):
        h = tuple(float(x) for x in self.h)
        couplings = {}
        for (j, k), value in dict(self.J).items():
            j, k = int(j), int(k)
            if j == k:
                raise ValidationError(f"diagonal coupling ({j}, {k}) is not allowed")
            key = (min(j, k), max(j, k))
            if key in couplings:
                raise ValidationError(f"duplicate coupling for pair {key}")
            if not (0 <= key[0] and key[1] < len(h)):
                raise DimensionError(f"coupling {key} outside 0..{len(h) - 1}")
            couplings[key] = float(value)
        if not self.allow_out_of_range:
            for k, hk in enumerate(h):
                if abs(hk) > H_RANGE:
                    raise ValidationError(f"h[{k}] = {hk} outside [-2, 2]")
            for key, value in couplings.items():
                if abs(value) > J_RANGE:
                    raise ValidationError(f"J{key} = {value} outside [-1, 1]")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", dict(sorted(couplings.items())))

    @property
    def n_qubits(self):
        return len(self.h)

    @classmethod
    def two_qubit(cls, h1, h2, J, **kwargs):
        return cls((h1, h2), {(0, 1): J}, **kwargs)

    def coupling_matrix(self):
        """Upper-triangular ``n x n`` array of the couplings."""
        Jm = np.zeros((self.n_qubits, self.n_qubits))
        for (j, k), value in self.J.items():
            Jm[j, k] = value
        return Jm

    def diagonal_energies(self):
        """``ising_energy`` of every basis state, in basis-index order."""
        n = self.n_qubits
        if n > ENUMERATION_GUARD:
            raise CapacityError(f"{n} qubits exceeds enumeration guard {ENUMERATION_GUARD}")
        spins = basis_spins(n)
        return _energies(spins, np.asarray(self.h), self.J)

    def flipped(self):
        """Problem with all fields negated (global spin-flip partner)."""
        return IsingProblem(tuple(-x for x in self.h), self.J, self.allow_out_of_range)


def basis_spins(n):
    """``(2**n, n)`` int8 array of spins for every basis index."""
    idx = np.arange(2**n)[:, None]
    bits = (idx >> np.arange(n - 1, -1, -1)) & 1
    return (1 - 2 * bits).astype(np.int8)


def config_index(config):
    """Basis index of a spin configuration."""
    index = 0
    for s in config:
        index = (index << 1) | (0 if s == 1 else 1)
    return index


def index_config(index, n):
    return tuple(1 - 2 * ((index >> (n - 1 - k)) & 1) for k in range(n))


def _energies(spins, h, J):
    s = spins.astype(float)
    e = -s @ h
    for (j, k), value in J.items():
        e -= value * s[:, j] * s[:, k]
    return e


def _check_config(problem, config):
    config = tuple(int(s) for s in config)
    if len(config) != problem.n_qubits:
        raise DimensionError(
            f"config has {len(config)} spins, problem has {problem.n_qubits} qubits"
        )
    if any(s not in (1, -1) for s in config):
        raise ValidationError(f"spins must be +1 or -1, got {config}")
    return config


def ising_energy(problem: IsingProblem, config) -> float:
    """Classical energy ``-sum h_k S_k - sum J_jk S_j S_k`` (units of B)."""
    config = _check_config(problem, config)
    e = -sum(h * s for h, s in zip(problem.h, config))
    for (j, k), value in problem.J.items():
        e -= value * config[j] * config[k]
    return float(e)


def ground_states(problem: IsingProblem, atol=1e-12) -> set:
    """All minimizing configurations by exhaustive enumeration (ties kept)."""
    n = problem.n_qubits
    if n > ENUMERATION_GUARD:
        raise CapacityError(f"{n} qubits exceeds enumeration guard {ENUMERATION_GUARD}")
    h = np.asarray(problem.h)
    chunk = 1 << min(n, 16)
    best, found = np.inf, []
    for start in range(0, 2**n, chunk):
        idx = np.arange(start, min(start + chunk, 2**n))
        bits = (idx[:, None] >> np.arange(n - 1, -1, -1)) & 1
        e = _energies((1 - 2 * bits).astype(np.int8), h, problem.J)
        emin = e.min()
        if emin < best - atol:
            best, found = emin, []
        if emin <= best + atol:
            found.extend(idx[e <= best + atol].tolist())
    return {index_config(i, n) for i in found}


def gibbs_probability(problem: IsingProblem, B_final, beta) -> float:
    """Thermal weight of the ground set for ``B_final * H_ising`` at inverse temperature ``beta``."""
    if beta < 0:
        raise ValidationError("beta must be non-negative")
    e = B_final * problem.diagonal_energies()
    w = np.exp(-beta * (e - e.min()))
    ground = [config_index(c) for c in ground_states(problem)]
    return float(w[ground].sum() / w.sum())


class _Table:
    """Piecewise-linear sample table on s in [0, 1]."""

    def __init__(self, s, columns, names):
        s = np.array(s, dtype=float)
        if s.ndim != 1 or len(s) < 2:
            raise ScheduleFormatError("schedule needs at least two samples")
        bad = np.flatnonzero(np.diff(s) <= 0)
        if bad.size:
            raise ScheduleFormatError("s must be strictly increasing", row=int(bad[0]) + 2)
        if s[0] != 0.0:
            raise ScheduleFormatError("schedule must start at s=0", row=1)
        if s[-1] != 1.0:
            raise ScheduleFormatError("schedule must reach s=1", row=len(s))
        s.setflags(write=False)
        self.s = s
        self._names = names
        for name, col in zip(names, columns):
            arr = np.array(col, dtype=float)
            if arr.shape != s.shape:
                raise ScheduleFormatError(f"column {name} has wrong length")
            arr.setflags(write=False)
            setattr(self, "_" + name, arr)

    def _interp(self, name, s):
        return np.interp(s, self.s, getattr(self, "_" + name))

    def column(self, name):
        return getattr(self, "_" + name)

    @property
    def min_spacing(self):
        return float(np.diff(self.s).min())

    def to_text(self):
        buf = io.StringIO()
        buf.write("s," + ",".join(self._names) + "\n")
        cols = [self.column(n) for n in self._names]
        for i, s in enumerate(self.s):
            buf.write(repr(float(s)) + "," + ",".join(repr(float(c[i])) for c in cols) + "\n")
        return buf.getvalue()


class AnnealingSchedule(_Table):
    """Sampled ``A(s)``, ``B(s)`` in rad/ns with linear interpolation."""

    def __init__(self, s, A, B):
        super().__init__(s, (A, B), ("A", "B"))
        for name, arr in (("A", self._A), ("B", self._B)):
            neg = np.flatnonzero(arr < 0)
            if neg.size:
                raise ScheduleFormatError(f"{name} must be non-negative", row=int(neg[0]) + 1)

    def A(self, s):
        return self._interp("A", s)

    def B(self, s):
        return self._interp("B", s)

    def __call__(self, s):
        return self.A(s), self.B(s)

    def derivative(self, s, step=None):
        """Centered finite difference ``(dA/ds, dB/ds)``; default step is half the smallest spacing."""
        h = 0.5 * self.min_spacing if step is None else step
        lo = np.clip(np.asarray(s, float) - h, 0.0, 1.0)
        hi = np.clip(np.asarray(s, float) + h, 0.0, 1.0)
        dA = (self.A(hi) - self.A(lo)) / (hi - lo)
        dB = (self.B(hi) - self.B(lo)) / (hi - lo)
        return dA, dB

    def scaled(self, factor):
        return AnnealingSchedule(self.s, factor * self._A, factor * self._B)


class ControlSchedule(_Table):
    """Sampled CJJ control flux ``phi_J^x(s)`` in rad."""

    def __init__(self, s, phi):
        super().__init__(s, (phi,), ("phi_Jx",))

    def phi(self, s):
        return self._interp("phi_Jx", s)

    def __call__(self, s):
        return self.phi(s)

    def rate(self, s, t_a):
        """``d phi / dt`` in rad/ns for an anneal of duration ``t_a``."""
        idx = np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, len(self.s) - 2)
        phis = self._phi_Jx
        return (phis[idx + 1] - phis[idx]) / (self.s[idx + 1] - self.s[idx]) / t_a


_KIND_COLUMNS = {"AB": ("s", "A", "B"), "control": ("s", "phi_Jx")}


def _split(line):
    return [tok for tok in re.split(r"[,\s]+", line.strip()) if tok]


def load_schedule(source: TextIO | str, kind="AB"):
    """Parse a schedule table.

    The first non-comment line is a header naming the columns (``s,A,B`` or
    ``s,phi_Jx``); fields are separated by commas and/or whitespace; lines
    starting with ``#`` are ignored.  Row numbers in errors count physical
    lines of the input.
    """
    if kind not in _KIND_COLUMNS:
        raise ValueError(f"kind must be one of {sorted(_KIND_COLUMNS)}")
    if isinstance(source, str):
        source = io.StringIO(source)
    wanted = _KIND_COLUMNS[kind]
    header, rows, linenos = None, [], []
    for lineno, line in enumerate(source, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        toks = _split(line)
        if header is None:
            header = toks
            missing = [c for c in wanted if c not in header]
            if missing:
                raise ScheduleFormatError(f"header lacks columns {missing}", row=lineno)
            continue
        if len(toks) != len(header):
            raise ScheduleFormatError(f"expected {len(header)} fields, got {len(toks)}", row=lineno)
        try:
            rows.append([float(tok) for tok in toks])
        except ValueError as exc:
            raise ScheduleFormatError(f"non-numeric field ({exc})", row=lineno) from None
        linenos.append(lineno)
    if header is None or not rows:
        raise ScheduleFormatError("no data rows")
    data = np.array(rows)
    cols = [data[:, header.index(c)] for c in wanted]
    try:
        if kind == "AB":
            return AnnealingSchedule(*cols)
        return ControlSchedule(*cols)
    except ScheduleFormatError as exc:
        # translate sample index to physical line number
        if exc.row is not None:
            raise ScheduleFormatError(str(exc).split(": ", 1)[1], row=linenos[exc.row - 1]) from None
        raise


@dataclass(frozen=True)
class CatalogEntry:
    h1: float
    h2: float
    J: float
    delta_E: float
    p_qubit: float
    p_flux: float
    p_dwave: float

    def __post_init__(self):
        for name in ("p_qubit", "p_flux", "p_dwave"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} outside [0, 1]")

    @property
    def problem(self):
        return IsingProblem.two_qubit(self.h1, self.h2, self.J)


def load_catalog(source=None) -> list:
    """Benchmark catalog rows; reads the packaged resource when ``source`` is None."""
    if source is None:
        text = resources.files("fluxanneal").joinpath("data/catalog.csv").read_text()
        source = io.StringIO(text)
    lines = (line for line in source if line.strip() and not line.startswith("#"))
    out = []
    for row in csv.DictReader(lines):
        out.append(
            CatalogEntry(
                float(row["h1"]),
                float(row["h2"]),
                float(row["J"]),
                float(row["delta_E"]),
                float(row["p_qubit_pct"]) / 100,
                float(row["p_flux_pct"]) / 100,
                float(row["p_dwave_pct"]) / 100,
            )
        )
    return out


#: problems used for spectra and the bath experiments
REFERENCE_CASES = {
    "a": IsingProblem.two_qubit(0.0, 0.05, -1.0),
    "b": IsingProblem.two_qubit(0.96, 0.94, -1.0),
    "c": IsingProblem.two_qubit(0.3, -0.3, 0.1),
}


def all_configs(n) -> Iterable[tuple]:
    return itertools.product((1, -1), repeat=n)
