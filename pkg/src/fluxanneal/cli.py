"""Command-line front end.

Every subcommand validates its whole configuration (files, ranges, scale
gates) before any computation and writes a ``#``-headed comma-separated
table plus a JSON sidecar.  Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .errors import (
    BracketingError,
    CapacityError,
    ConfigError,
    DegenerateFitError,
    NumericalError,
    SingularFrameError,
    ValidationError,
)
from .io import format_table, provenance, write_result
from .problem import REFERENCE_CASES, IsingProblem, ground_states, load_catalog, load_schedule

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

SCALES = {
    "desk": {"n_bath": 10, "bath_t_a": 50.0, "flux_grid": "desk"},
    "paper": {"n_bath": 16, "bath_t_a": 1000.0, "flux_grid": "full"},
}

DEFAULTS = {
    "run-qubit": dict(t_a=5.0, tau=1e-4, initial="ground", schedule=None, catalog=False, case=None,
                      problem=None, tau_halving=False, variant="bare"),
    "derive-scheme": dict(variant="bare", J=-1.0, control=None, samples=201, device=None),
    "map-coupling": dict(J_grid=None, device=None),
    "run-flux": dict(t_a=5.0, tau=5e-5, case=None, problem=None, observe=11, variant="tilde", device=None,
                     control=None),
    "run-bath": dict(model="I", n_bath=None, energy=5.0, lam=0.8, betas=None, seeds=None, n_seeds=3,
                     t_a=None, tau=0.0025, case="a", problem=None, schedule=None, initial="plus"),
    "catalog": dict(),
}
COMMON = dict(seed=0, scale="desk", output_dir=None, allow_long=False)


def _floats(text):
    try:
        return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _grid(text):
    """``lo:hi:n`` or a comma list."""
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    if ":" in str(text):
        try:
            lo, hi, n = str(text).split(":")
            return list(np.linspace(float(lo), float(hi), int(n)))
        except ValueError:
            raise ConfigError(f"grid must be lo:hi:n, got {text!r}") from None
    return _floats(text)


def _add_common(p):
    p.add_argument("--config", help="JSON file with option values; explicit flags win")
    p.add_argument("--seed", type=int)
    p.add_argument("--scale", choices=sorted(SCALES))
    p.add_argument("-o", "--output-dir", dest="output_dir", help="write <command>.csv/.json here (default: stdout)")
    p.add_argument("--allow-long", dest="allow_long", action="store_true", default=None,
                   help="permit paper-scale runs")


def _add_problem(p):
    p.add_argument("--case", choices=sorted(REFERENCE_CASES))
    p.add_argument("--problem", help="h1,h2,J")


def build_parser():
    ap = argparse.ArgumentParser(prog="fluxanneal", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run-qubit", help="qubit-model anneal of one problem or the catalog")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--catalog", action="store_true", default=None)
    p.add_argument("--schedule", help="A,B table (default: derived scheme)")
    p.add_argument("--variant", choices=["bare", "tilde"])
    p.add_argument("--t-a", dest="t_a", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--initial", choices=["ground", "plus"])
    p.add_argument("--tau-halving", dest="tau_halving", action="store_true", default=None)

    p = sub.add_parser("derive-scheme", help="A(s), B(s) from the single-SQUID frame")
    _add_common(p)
    p.add_argument("--variant", choices=["bare", "tilde"])
    p.add_argument("--J", type=float, help="coupling that sets the coupler bias")
    p.add_argument("--control", help="s,phi_Jx table (default: packaged ramp)")
    p.add_argument("--samples", type=int)
    p.add_argument("--device", help="key = value device file")

    p = sub.add_parser("map-coupling", help="J -> coupler bias and predicted M_eff")
    _add_common(p)
    p.add_argument("--J-grid", dest="J_grid", help="lo:hi:n or comma list (default -1:1:21)")
    p.add_argument("--device")

    p = sub.add_parser("run-flux", help="full three-SQUID circuit anneal")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--t-a", dest="t_a", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--observe", type=int, help="number of equally spaced trajectory samples")
    p.add_argument("--variant", choices=["bare", "tilde"])
    p.add_argument("--device")
    p.add_argument("--control")

    p = sub.add_parser("run-bath", help="two qubits plus a spin bath, beta sweep over seeds")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--model", choices=["I", "II"])
    p.add_argument("--n-bath", dest="n_bath", type=int)
    p.add_argument("--energy", type=float, help="K (model I) or Omega (model II), rad/ns")
    p.add_argument("--lam", type=float)
    p.add_argument("--betas", help="comma list (default: 0.588)")
    p.add_argument("--seeds", help="comma list of bath seeds (default: range(n_seeds) offset by --seed)")
    p.add_argument("--n-seeds", dest="n_seeds", type=int)
    p.add_argument("--t-a", dest="t_a", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--schedule")
    p.add_argument("--initial", choices=["ground", "plus"])

    p = sub.add_parser("catalog", help="print the benchmark catalog with ground states")
    _add_common(p)
    return ap


def resolve_config(args) -> dict:
    """Defaults, then the ``--config`` file, then explicit flags."""
    cmd = args.command
    cfg = dict(COMMON, **DEFAULTS[cmd])
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys for {cmd}: {sorted(unknown)}")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key in cfg and value is not None:
            cfg[key] = value
    if cfg["scale"] not in SCALES:
        raise ConfigError(f"scale must be one of {sorted(SCALES)}")
    return cfg


def _check_file(path, what):
    if path is not None and not os.path.isfile(path):
        raise ConfigError(f"{what} file not found: {path}")


def _problem(cfg) -> IsingProblem:
    if cfg.get("problem"):
        vals = _floats(cfg["problem"]) if isinstance(cfg["problem"], str) else list(cfg["problem"])
        if len(vals) != 3:
            raise ConfigError("problem must be h1,h2,J")
        return IsingProblem.two_qubit(*vals)
    if cfg.get("case"):
        return REFERENCE_CASES[cfg["case"]]
    raise ConfigError("give --case or --problem")


def _device(cfg):
    from .fluxsim.device import DeviceParams, load_device

    _check_file(cfg.get("device"), "device")
    return DeviceParams.reference() if cfg.get("device") is None else load_device(cfg["device"])


def _load_table(path, kind):
    _check_file(path, "schedule")
    with open(path) as fh:
        return load_schedule(fh, kind)


def _gate_scale(cfg, command):
    if cfg["scale"] == "paper" and not cfg["allow_long"]:
        raise ConfigError(f"{command} at paper scale runs for days; pass --allow-long to proceed")


def cmd_run_qubit(cfg):
    from .qubitsim import AnnealRun, evolve, minimal_gap, success_probability
    from .schedules import default_scheme

    from .fluxsim.device import DeviceParams, map_J_to_phi

    fixed = _load_table(cfg["schedule"], "AB") if cfg["schedule"] else None
    schemes = {}

    def schedule_for(prob):
        if fixed is not None:
            return fixed
        # the tilde variant depends on the coupler bias, hence on J
        J = prob.J.get((0, 1), -1.0) if cfg["variant"] == "tilde" else None
        if J not in schemes:
            phi = None if J is None else map_J_to_phi(DeviceParams.reference(), J)
            schemes[J] = default_scheme(variant=cfg["variant"], phi_J0x=phi).schedule
        return schemes[J]

    if cfg["catalog"]:
        entries = load_catalog()
        items = [(e.problem, e.p_qubit) for e in entries]
    else:
        items = [(_problem(cfg), None)]
    taus = [cfg["tau"], cfg["tau"] / 2] if cfg["tau_halving"] else [cfg["tau"]]
    rows = []
    for i, (prob, ref) in enumerate(items):
        sched = schedule_for(prob)
        gap, s_gap = minimal_gap(prob, sched)
        ground = ground_states(prob)
        for tau in taus:
            res = evolve(AnnealRun(prob, sched, cfg["t_a"], tau, cfg["initial"]))
            p = success_probability(res.final, ground)
            rows.append((i, *prob.h, prob.J.get((0, 1), 0.0), tau, p, gap, s_gap,
                         "" if ref is None else ref))
    cols = ["index", "h1", "h2", "J", "tau", "p_success", "gap", "s_gap", "p_reference"]
    return "run-qubit", cols, rows, {}


def cmd_derive_scheme(cfg):
    from .fluxsim.device import map_J_to_phi
    from .fluxsim.frame import derive_scheme
    from .problem import ControlSchedule
    from .schedules import default_control

    params = _device(cfg)
    control = _load_table(cfg["control"], "control") if cfg["control"] else default_control()
    if not isinstance(control, ControlSchedule):
        raise ConfigError("control table must have columns s,phi_Jx")
    if cfg["samples"] < 2:
        raise ConfigError("samples must be at least 2")
    phi_J0x = map_J_to_phi(params, cfg["J"])
    sch = derive_scheme(params, control, cfg["variant"], phi_J0x, s_grid=np.linspace(0, 1, cfg["samples"]))
    rows = [(float(s), float(a), float(b)) for s, a, b in zip(sch.schedule.s, sch.schedule.A(sch.schedule.s),
                                                               sch.schedule.B(sch.schedule.s))]
    return "derive-scheme", ["s", "A", "B"], rows, {"E_L_variant": cfg["variant"], "phi_J0x": phi_J0x}


def cmd_map_coupling(cfg):
    from .fluxsim.device import derive_circuit, map_J_to_phi

    params = _device(cfg)
    grid = _grid(cfg["J_grid"] if cfg["J_grid"] is not None else "-1:1:21")
    slope = derive_circuit(params).M_eff_line_slope
    rows = [(float(J), map_J_to_phi(params, J), float(J * slope) + 0.0) for J in grid]
    return "map-coupling", ["J", "phi_J0x", "M_eff_pred_pH"], rows, {"M_eff_slope_pH": slope}


def cmd_run_flux(cfg):
    from .fluxsim.basis import COUPLER_GRID, QUBIT_GRID
    from .fluxsim.observables import run_flux_anneal
    from .schedules import default_control

    _gate_scale(cfg, "run-flux")
    params = _device(cfg)
    prob = _problem(cfg)
    control = _load_table(cfg["control"], "control") if cfg["control"] else default_control()
    grids = {}
    if SCALES[cfg["scale"]]["flux_grid"] == "full":
        grids = dict(qubit_grid=QUBIT_GRID, coupler_grid=COUPLER_GRID)
    res = run_flux_anneal(params, prob, control, cfg["t_a"], cfg["tau"], observe_s=np.linspace(0, 1, cfg["observe"]),
                          variant=cfg["variant"], **grids)
    rows = [(float(s), *(float(x) for x in pops), tr, leak) for s, pops, tr, leak in res.trajectory]
    meta = {"p_success": res.success_probability, "leakage_final": res.leakage_final,
            "norm_drift": res.norm_drift}
    return "run-flux", ["s", "p_uu", "p_ud", "p_du", "p_dd", "trace", "leakage"], rows, meta


def cmd_run_bath(cfg):
    from .bathsim import SpinBathSpec, beta_sweep
    from .bathsim.spec import BETA_STAR
    from .schedules import hardware_like_schedule

    _gate_scale(cfg, "run-bath")
    scale = SCALES[cfg["scale"]]
    prob = _problem(cfg)
    sched = _load_table(cfg["schedule"], "AB") if cfg["schedule"] else hardware_like_schedule()
    n_bath = cfg["n_bath"] or scale["n_bath"]
    t_a = cfg["t_a"] or scale["bath_t_a"]
    betas = _floats(cfg["betas"]) if cfg["betas"] is not None else [BETA_STAR]
    if cfg["seeds"] is not None:
        seeds = [int(x) for x in _floats(cfg["seeds"])]
    else:
        seeds = [cfg["seed"] + k for k in range(cfg["n_seeds"])]
    spec = SpinBathSpec(cfg["model"], n_bath, cfg["energy"], cfg["lam"], betas[0], seeds[0])
    rows_ = beta_sweep(prob, sched, spec, betas, seeds, t_a, cfg["tau"], cfg["initial"])
    ref = _dwave_reference(prob)
    cols = ["beta", "mean", "std", "gibbs", "p_dwave_ref"] + [f"seed_{s}" for s in seeds]
    rows = [(r.beta, r.mean, r.std, r.gibbs, "" if ref is None else ref, *r.values) for r in rows_]
    return "run-bath", cols, rows, {"n_bath": n_bath, "t_a": t_a}


def _dwave_reference(prob):
    for e in load_catalog():
        if e.problem == prob:
            return e.p_dwave
    return None


def cmd_catalog(cfg):
    rows = []
    for i, e in enumerate(load_catalog()):
        gs = ";".join("".join("u" if x > 0 else "d" for x in c) for c in sorted(ground_states(e.problem)))
        rows.append((i, e.h1, e.h2, e.J, e.delta_E, e.p_qubit, e.p_flux, e.p_dwave, gs))
    return "catalog", ["index", "h1", "h2", "J", "delta_E", "p_qubit", "p_flux", "p_dwave", "ground"], rows, {}


COMMANDS = {
    "run-qubit": cmd_run_qubit,
    "derive-scheme": cmd_derive_scheme,
    "map-coupling": cmd_map_coupling,
    "run-flux": cmd_run_flux,
    "run-bath": cmd_run_bath,
    "catalog": cmd_catalog,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            name, cols, rows, extra = COMMANDS[args.command](cfg)
    except (ConfigError, ValidationError, CapacityError, FileNotFoundError) as exc:
        print(f"fluxanneal {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, BracketingError, DegenerateFitError, SingularFrameError) as exc:
        print(f"fluxanneal {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    meta = dict(provenance(name, cfg, cfg["seed"], cfg["scale"]), **extra)
    if cfg["output_dir"]:
        path = write_result(cfg["output_dir"], name, cols, rows, meta, cfg)
        print(path)
    else:
        sys.stdout.write(format_table(cols, rows, meta))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
