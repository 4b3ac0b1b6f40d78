"""Command-line front end.

Every subcommand runs with built-in demo inputs when no ``--input`` file is
given.  Parameters can be overridden as ``KEY=VALUE`` pairs (values are parsed
as JSON, falling back to plain strings).

Input documents are JSON objects.  States and operators use
``{"n_max": int, "kind": "pure"|"mixed"|"operator", "entries": [[re, im], ...]}``
(matrices as nested rows) or a preset such as ``{"preset": "noon", "N": 2}``,
``{"preset": "fock", "n_a": 1, "n_b": 0}``, ``{"preset": "on", "K": 4, "nbar": 2}``.
Complex numbers are given as ``[re, im]`` or a plain real number.

Exit status: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from ._validation import InvariantError, tolerances
from .correlations import separability_witness_report
from .estimate import ExperimentConfig, run_experiment
from .fock import PureState, from_json_obj, make_space, sector_unitary, to_json_obj
from .interferometer import BeamSplitterParam, bs_unitary, extract_generator
from .metrology import (
    FisherReport,
    bures_distance,
    fidelity,
    fisher_report,
    identity_povm,
    photon_counting_povm,
    qfi_finite_difference,
    qfi_pure,
    qfi_sld,
    qfi_variance,
)
from .optimal import (
    OneModeDistribution,
    fisher_fock_closed,
    fisher_on_state_closed,
    fisher_one_mode_closed,
    noon_state,
    on_state,
    optimize_max_qfi,
)

ENV_N_MAX = "MZMETRO_N_MAX"
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

COMMANDS = ("qfi", "cfi", "fidelity", "closed-form", "optimal-state", "sweep", "witness", "simulate")

# allowed document keys and their defaults; None means "demo input"
SCHEMAS = {
    "qfi": {"state": None, "alpha": math.pi / 4, "generator": None, "method": "auto",
            "kernel_tol": 1e-12, "dtheta": 1e-3},
    "cfi": {"state": None, "alpha": math.pi / 4, "theta": 0.4, "povm": "photon_counting"},
    "fidelity": {"rho": None, "sigma": None},
    "closed-form": {"kind": "fock", "N": 2, "k": 1, "K": 4, "nbar": 2.0, "probs": None,
                    "alpha": math.pi / 4},
    "optimal-state": {"N_max": None, "alpha": math.pi / 4, "chi": 0.0},
    "sweep": {"kind": "on-state", "K": "4", "nbar": "0:4:0.5"},
    "witness": {"state": None, "trials": 50, "degree_cap": 2, "pair": "ab", "seed": 0},
    "simulate": {"input_state": None, "alpha": math.pi / 4, "theta_true": 0.7, "shots": 1000,
                 "runs": 100, "seed": 0, "grid": None},
}

DEFAULT_STATES = {
    "qfi": {"preset": "noon", "N": 2},
    "cfi": {"preset": "fock", "n_a": 1, "n_b": 0},
    "witness": {"preset": "fock", "n_a": 1, "n_b": 1, "beam_splitter": True},
    "simulate": {"preset": "fock", "n_a": 1, "n_b": 0},
}


class InputValidationError(ValueError):
    """Collects every violation found in an input document."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# --- formatting ---------------------------------------------------------------

def fmt(x) -> str:
    return format(float(x), ".12g")


def _round(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(fmt(obj))
    if isinstance(obj, (np.floating, np.integer)):
        return _round(obj.item())
    if isinstance(obj, dict):
        return {k: (v if k in ("state", "optimizer_state", "entries") else _round(v)) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def write_csv(rows, header, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


# --- parsing and validation ---------------------------------------------------

def parse_range(text) -> list[float]:
    """``start:stop:step`` with both ends included when on the grid; a bare number is a single value."""
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(v) for v in text]
    parts = str(text).split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ValueError(f"range {text!r} must be start:stop:step")
    start, stop, step = map(float, parts)
    if step <= 0:
        raise ValueError("range step must be positive")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + i * step, 12) for i in range(n + 1)]


def _complex(value, name, problems):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    problems.append(f"{name}: expected a number or [re, im], got {value!r}")
    return None


def _number(value, name, problems, integer=False, low=None, high=None):
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if ok and integer and float(value) != int(value):
        ok = False
    if not ok:
        problems.append(f"{name}: expected {'an integer' if integer else 'a number'}, got {value!r}")
        return None
    value = int(value) if integer else float(value)
    if low is not None and value < low:
        problems.append(f"{name}: must be >= {low}, got {value}")
    if high is not None and value > high:
        problems.append(f"{name}: must be <= {high}, got {value}")
    return value


def _check_state_doc(doc, name, problems, allow_mixed=True):
    """Validate a serialized state or preset; records problems and returns nothing."""
    if not isinstance(doc, dict):
        problems.append(f"{name}: expected an object")
        return
    if "preset" in doc:
        preset = doc["preset"]
        allowed = {"noon": {"N", "chi"}, "fock": {"n_a", "n_b", "beam_splitter"}, "on": {"K", "nbar", "chi"},
                   "vacuum": set()}
        if preset not in allowed:
            problems.append(f"{name}.preset: unknown preset {preset!r}; choose from {sorted(allowed)}")
            return
        extra = set(doc) - allowed[preset] - {"preset", "n_max"}
        if extra:
            problems.append(f"{name}: unknown keys {sorted(extra)} for preset {preset!r}")
        if preset == "on":
            K = _number(doc.get("K", 4), f"{name}.K", problems, integer=True, low=0)
            nbar = _number(doc.get("nbar", 2.0), f"{name}.nbar", problems, low=0)
            if K is not None and nbar is not None and nbar > K:
                problems.append(f"{name}: on_state precondition violated, requires 0 <= nbar <= K (nbar={nbar}, K={K})")
        if preset == "noon":
            _number(doc.get("N", 2), f"{name}.N", problems, integer=True, low=0)
        if preset == "fock":
            _number(doc.get("n_a", 0), f"{name}.n_a", problems, integer=True, low=0)
            _number(doc.get("n_b", 0), f"{name}.n_b", problems, integer=True, low=0)
        return
    extra = set(doc) - {"n_max", "kind", "entries", "hermitian"}
    if extra:
        problems.append(f"{name}: unknown keys {sorted(extra)}")
    for key in ("n_max", "kind", "entries"):
        if key not in doc:
            problems.append(f"{name}: missing {key!r}")
    if any(key not in doc for key in ("n_max", "kind", "entries")):
        return
    n_max = _number(doc["n_max"], f"{name}.n_max", problems, integer=True, low=0)
    kinds = ("pure", "mixed") if allow_mixed else ("pure",)
    if doc["kind"] not in kinds:
        problems.append(f"{name}.kind: expected one of {kinds}, got {doc['kind']!r}")
        return
    if n_max is None:
        return
    dim = (n_max + 1) * (n_max + 2) // 2
    try:
        arr = np.asarray(doc["entries"], dtype=float)
    except (TypeError, ValueError):
        problems.append(f"{name}.entries: must be numeric [re, im] pairs")
        return
    want = (dim, 2) if doc["kind"] == "pure" else (dim, dim, 2)
    if arr.shape != want:
        problems.append(f"{name}.entries: expected shape {want} for n_max={n_max}, got {arr.shape}")
        return
    z = arr[..., 0] + 1j * arr[..., 1]
    if doc["kind"] == "pure":
        norm = float(np.linalg.norm(z))
        if abs(norm - 1) > 1e-10:
            problems.append(f"{name}: normalization invariant violated, norm is {norm:.12g} (expected 1)")
    else:
        tr = float(np.trace(z).real)
        if abs(tr - 1) > 1e-10:
            problems.append(f"{name}: unit-trace invariant violated, trace is {tr:.12g}")
        if np.max(np.abs(z - z.conj().T)) > 1e-10:
            problems.append(f"{name}: hermiticity invariant violated")


def validate_input(document, command: str) -> dict:
    """Schema-check ``document`` for ``command`` and fill defaults.

    Raises :class:`InputValidationError` listing every problem found.
    """
    if command not in SCHEMAS:
        raise InputValidationError([f"unknown command {command!r}"])
    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise InputValidationError(["input document must be a JSON object"])
    schema = SCHEMAS[command]
    problems = []
    unknown = sorted(set(document) - set(schema))
    if unknown:
        problems.append(f"unknown keys {unknown}; allowed: {sorted(schema)}")
    cfg = {k: document.get(k, v) for k, v in schema.items()}
    cfg["defaults_filled"] = sorted(k for k in schema if k not in document)

    if "alpha" in cfg:
        cfg["alpha"] = _complex(cfg["alpha"], "alpha", problems)
    if "seed" in cfg:
        cfg["seed"] = _number(cfg["seed"], "seed", problems, integer=True, low=0, high=2**64 - 1)

    if command == "qfi":
        if cfg["method"] not in ("auto", "pure", "sld", "fd"):
            problems.append(f"method: expected auto|pure|sld|fd, got {cfg['method']!r}")
        _number(cfg["kernel_tol"], "kernel_tol", problems, low=1e-300)
        d = _number(cfg["dtheta"], "dtheta", problems)
        if d is not None and not 0 < d <= 1e-2:
            problems.append("dtheta: must lie in (0, 1e-2]")
        if cfg["state"] is not None:
            _check_state_doc(cfg["state"], "state", problems)
        if cfg["generator"] is not None:
            g = cfg["generator"]
            if not isinstance(g, dict) or g.get("kind") != "operator":
                problems.append("generator: expected a serialized operator")
    elif command == "cfi":
        _number(cfg["theta"], "theta", problems)
        if cfg["povm"] not in ("photon_counting", "identity"):
            problems.append(f"povm: expected photon_counting|identity, got {cfg['povm']!r}")
        if cfg["state"] is not None:
            _check_state_doc(cfg["state"], "state", problems)
    elif command == "fidelity":
        for key in ("rho", "sigma"):
            if cfg[key] is not None:
                _check_state_doc(cfg[key], key, problems)
    elif command == "closed-form":
        kind = cfg["kind"]
        if kind == "fock":
            N = _number(cfg["N"], "N", problems, integer=True, low=0)
            k = _number(cfg["k"], "k", problems, integer=True, low=0)
            if N is not None and k is not None and k > N:
                problems.append(f"k: must satisfy 0 <= k <= N (k={k}, N={N})")
        elif kind == "on-state":
            K = _number(cfg["K"], "K", problems, integer=True, low=0)
            nbar = _number(cfg["nbar"], "nbar", problems, low=0)
            if K is not None and nbar is not None and nbar > K:
                problems.append(f"nbar: on_state precondition violated, requires 0 <= nbar <= K (nbar={nbar}, K={K})")
        elif kind == "one-mode":
            p = cfg["probs"]
            if not isinstance(p, list) or not p:
                problems.append("probs: expected a non-empty list of probabilities")
            else:
                arr = np.asarray(p, dtype=float)
                if np.any(arr < 0) or abs(arr.sum() - 1) > 1e-12:
                    problems.append("probs: must be non-negative and sum to 1")
        else:
            problems.append(f"kind: expected fock|on-state|one-mode, got {kind!r}")
    elif command == "optimal-state":
        if cfg["N_max"] is not None:
            _number(cfg["N_max"], "N_max", problems, integer=True, low=0)
        _number(cfg["chi"], "chi", problems)
    elif command == "sweep":
        if cfg["kind"] != "on-state":
            problems.append(f"kind: only 'on-state' sweeps are supported, got {cfg['kind']!r}")
        for key in ("K", "nbar"):
            try:
                cfg[key] = parse_range(cfg[key])
            except ValueError as exc:
                problems.append(f"{key}: {exc}")
        if isinstance(cfg["K"], list) and any(k != int(k) or k < 0 for k in cfg["K"]):
            problems.append("K: values must be non-negative integers")
    elif command == "witness":
        _number(cfg["trials"], "trials", problems, integer=True, low=1)
        _number(cfg["degree_cap"], "degree_cap", problems, integer=True, low=1)
        if cfg["pair"] not in ("ab", "cd"):
            problems.append(f"pair: expected ab|cd, got {cfg['pair']!r}")
        if cfg["state"] is not None:
            _check_state_doc(cfg["state"], "state", problems)
    elif command == "simulate":
        _number(cfg["theta_true"], "theta_true", problems)
        _number(cfg["shots"], "shots", problems, integer=True, low=1)
        _number(cfg["runs"], "runs", problems, integer=True, low=1)
        if cfg["grid"] is not None:
            g = cfg["grid"]
            if not (isinstance(g, list) and len(g) == 3):
                problems.append("grid: expected [theta_min, theta_max, points]")
            else:
                lo = _number(g[0], "grid[0]", problems)
                hi = _number(g[1], "grid[1]", problems)
                _number(g[2], "grid[2]", problems, integer=True, low=3)
                th = cfg["theta_true"]
                if lo is not None and hi is not None and isinstance(th, (int, float)) and not lo <= th <= hi:
                    problems.append("grid: theta_true must lie inside the grid")
        if cfg["input_state"] is not None:
            _check_state_doc(cfg["input_state"], "input_state", problems, allow_mixed=False)
    if problems:
        raise InputValidationError(problems)
    return cfg


def _required_n_max(doc) -> int:
    p = doc.get("preset")
    if p == "noon":
        return int(doc.get("N", 2))
    if p == "fock":
        return int(doc.get("n_a", 0)) + int(doc.get("n_b", 0))
    if p == "on":
        return int(doc.get("K", 4))
    return 0


def build_state(doc, n_max: int | None):
    """Construct a state from a serialized object or a preset."""
    if "preset" not in doc:
        return from_json_obj(doc)
    need = _required_n_max(doc)
    n = int(doc.get("n_max", n_max if n_max is not None else need))
    if n < need:
        raise InputValidationError([f"n_max={n} is too small for preset {doc['preset']!r} (needs {need})"])
    space = make_space(n)
    p = doc["preset"]
    if p == "noon":
        return noon_state(space, int(doc.get("N", 2)), float(doc.get("chi", 0.0)))
    if p == "on":
        return on_state(space, int(doc.get("K", 4)), float(doc.get("nbar", 2.0)), float(doc.get("chi", 0.0)))
    if p == "vacuum":
        return PureState.vacuum(space)
    state = PureState.fock(space, int(doc.get("n_a", 0)), int(doc.get("n_b", 0)))
    if doc.get("beam_splitter"):
        state = state.evolve(bs_unitary(space, math.pi / 4))
    return state


# --- commands -----------------------------------------------------------------

def _generator(cfg, space):
    if cfg.get("generator") is not None:
        op = from_json_obj(cfg["generator"])
        if op.space != space:
            raise InputValidationError(["generator and state live on different spaces"])
        return op, "custom"
    alpha = cfg["alpha"]
    return extract_generator(space, BeamSplitterParam(alpha)), f"MZ generator, alpha={fmt(alpha.real)}{'' if alpha.imag == 0 else '+' + fmt(alpha.imag) + 'i'}"


def cmd_qfi(cfg, ctx):
    state = build_state(cfg["state"] or DEFAULT_STATES["qfi"], ctx["n_max"])
    J, tag = _generator(cfg, state.space)
    method = cfg["method"]
    if method == "auto":
        method = "pure" if isinstance(state, PureState) else "sld"
    if method == "pure":
        if not isinstance(state, PureState):
            raise InputValidationError(["method 'pure' needs a pure state"])
        q = qfi_pure(state, J)
    elif method == "sld":
        q = qfi_sld(state, J, cfg["kernel_tol"])
    else:
        q = qfi_finite_difference(state, J, cfg["dtheta"])
    report = FisherReport(qfi=q, generator_tag=tag, four_variance=qfi_variance(state, J))
    return {**report.to_dict(), "method": method}


def cmd_cfi(cfg, ctx):
    state = build_state(cfg["state"] or DEFAULT_STATES["cfi"], ctx["n_max"])
    J, tag = _generator(cfg, state.space)
    povm = photon_counting_povm(state.space) if cfg["povm"] == "photon_counting" else identity_povm(state.space)
    # MZ phase exp(+i theta J) is the exp(-i theta J') family with J' = -J
    report = fisher_report(state, -J, povm, theta0=cfg["theta"], generator_tag=tag)
    return {**report.to_dict(), "theta": cfg["theta"], "povm": cfg["povm"]}


def cmd_fidelity(cfg, ctx):
    if cfg["rho"] is None and cfg["sigma"] is None:
        space = make_space(ctx["n_max"] if ctx["n_max"] is not None else 2)
        rho = noon_state(space, 2)
        J = extract_generator(space)
        sigma = rho.evolve(sector_unitary(space, J, 0.1))
        demo = "NOON N=2 vs. the same state after phase 0.1"
    else:
        if cfg["rho"] is None or cfg["sigma"] is None:
            raise InputValidationError(["fidelity needs both rho and sigma"])
        rho = build_state(cfg["rho"], ctx["n_max"])
        sigma = build_state(cfg["sigma"], ctx["n_max"])
        demo = None
    out = {"fidelity": fidelity(rho, sigma), "bures_distance": bures_distance(rho, sigma)}
    if demo:
        out["demo"] = demo
    return out


def cmd_closed_form(cfg, ctx):
    kind = cfg["kind"]
    if kind == "fock":
        return fisher_fock_closed(cfg["N"], cfg["k"])
    if kind == "on-state":
        return fisher_on_state_closed(int(cfg["K"]), float(cfg["nbar"]))
    dist = OneModeDistribution(np.asarray(cfg["probs"], dtype=float))
    return fisher_one_mode_closed(dist, BeamSplitterParam(cfg["alpha"]))


def cmd_optimal_state(cfg, ctx):
    cap = cfg["N_max"]
    n_max = ctx["n_max"] if ctx["n_max"] is not None else (cap if cap is not None else 4)
    cap = n_max if cap is None else int(cap)
    if cap > n_max:
        raise InputValidationError([f"N_max={cap} exceeds n_max={n_max}"])
    space = make_space(n_max)
    J = extract_generator(space, BeamSplitterParam(cfg["alpha"]))
    opt = optimize_max_qfi(space, J, cap)
    noon = noon_state(space, cap, cfg["chi"])
    return {
        "max_qfi": opt.max_qfi,
        "eigen_spread": list(opt.eigen_spread),
        "degeneracy_note": opt.degeneracy_note,
        "optimizer_state": to_json_obj(opt.optimizer_state),
        "optimizer_qfi": qfi_pure(opt.optimizer_state, J),
        "noon_qfi": qfi_pure(noon, J),
        "extremal_pairs": len(opt.lowest) * len(opt.highest),
    }


def sweep_on_state(Ks, nbars, n_max=None):
    """Rows ``(K, nbar, F_closed, F_numeric)`` for every ``nbar <= K`` on the grid."""
    space = make_space(max(int(max(Ks)), n_max or 0))
    J = extract_generator(space)
    rows = []
    for K in Ks:
        for nbar in nbars:
            if nbar > K:
                continue
            state = on_state(space, int(K), nbar)
            rows.append((int(K), float(nbar), fisher_on_state_closed(int(K), nbar), qfi_pure(state, J)))
    return rows


def cmd_sweep(cfg, ctx):
    return sweep_on_state(cfg["K"], cfg["nbar"], ctx["n_max"])


def cmd_witness(cfg, ctx):
    state = build_state(cfg["state"] or DEFAULT_STATES["witness"], ctx["n_max"])
    seed = cfg["seed"]
    if ctx["seed"] is not None and "seed" in cfg["defaults_filled"]:
        seed = ctx["seed"]
    rep = separability_witness_report(state, int(cfg["trials"]), int(cfg["degree_cap"]), int(seed), cfg["pair"])
    return rep.to_dict()


def cmd_simulate(cfg, ctx):
    state = build_state(cfg["input_state"] or DEFAULT_STATES["simulate"], ctx["n_max"])
    seed = cfg["seed"]
    if ctx["seed"] is not None and "seed" in cfg["defaults_filled"]:
        seed = ctx["seed"]
    config = ExperimentConfig(
        input_state=state,
        bs=BeamSplitterParam(cfg["alpha"]),
        theta_true=cfg["theta_true"],
        shots=int(cfg["shots"]),
        runs=int(cfg["runs"]),
        seed=int(seed),
        grid=tuple(cfg["grid"]) if cfg["grid"] is not None else None,
    )
    run = run_experiment(config)
    out = run.to_dict()
    out["config"] = {
        "alpha": [config.bs.alpha.real, config.bs.alpha.imag],
        "theta_true": config.theta_true,
        "shots": config.shots,
        "runs": config.runs,
        "seed": config.seed,
        "grid": list(config.grid),
        "defaults_filled": cfg["defaults_filled"],
    }
    return out


HANDLERS = {
    "qfi": cmd_qfi,
    "cfi": cmd_cfi,
    "fidelity": cmd_fidelity,
    "closed-form": cmd_closed_form,
    "optimal-state": cmd_optimal_state,
    "sweep": cmd_sweep,
    "witness": cmd_witness,
    "simulate": cmd_simulate,
}


# --- argument handling --------------------------------------------------------

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise InputValidationError([f"expected KEY=VALUE, got {item!r}"])
        key, value = item.split("=", 1)
        out[key] = _parse_value(value)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mzmetro", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--seed", type=int, default=None, help="default seed for randomized commands")
    parser.add_argument("--n-max", type=int, default=None, help=f"truncation for preset states (env {ENV_N_MAX})")
    parser.add_argument("--tolerance", type=float, default=None, help="construction tolerance (default 1e-12)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", "-i", default=None, help="JSON input document")
        p.add_argument("--output", choices=("json", "csv"), default=None)
        p.add_argument("--out", "-o", default=None, help="output file (default: stdout)")
        p.add_argument("params", nargs="*", help="KEY=VALUE overrides")
        if name == "closed-form":
            g = p.add_mutually_exclusive_group()
            g.add_argument("--fock", dest="kind", action="store_const", const="fock")
            g.add_argument("--on-state", dest="kind", action="store_const", const="on-state")
            g.add_argument("--one-mode", dest="kind", action="store_const", const="one-mode")
        if name == "sweep":
            p.add_argument("--on-state", dest="kind", action="store_const", const="on-state")
        if name == "simulate":
            p.add_argument("--estimates-csv", default=None, help="write per-run estimates here")
    return parser


def _load_document(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputValidationError([f"malformed JSON in {path}: {exc.msg} at line {exc.lineno}, column {exc.colno}"])


def _emit(result, command, output, stream, args):
    if command == "sweep":
        output = output or "csv"
        if output == "csv":
            write_csv(result, ["K", "nbar", "F_closed", "F_numeric"], stream)
            return
        result = [dict(zip(["K", "nbar", "F_closed", "F_numeric"], r)) for r in result]
    elif command == "simulate":
        estimates = result["estimates"]
        if getattr(args, "estimates_csv", None):
            with open(args.estimates_csv, "w", encoding="utf-8", newline="") as fh:
                write_csv(((i, e) for i, e in enumerate(estimates)), ["run", "estimate"], fh)
        if output == "csv":
            write_csv(((i, e) for i, e in enumerate(estimates)), ["run", "estimate"], stream)
            return
    elif output == "csv":
        if isinstance(result, dict):
            flat = {k: v for k, v in result.items() if not isinstance(v, (dict, list))}
            write_csv([list(flat.values())], list(flat.keys()), stream)
        else:
            write_csv([[result]], ["value"], stream)
        return
    if isinstance(result, float):
        stream.write(fmt(result) + "\n")
        return
    json.dump(_round(result), stream, indent=2)
    stream.write("\n")


def dispatch(argv=None, stdout=None, stderr=None) -> int:
    """Run one command; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    n_max = args.n_max
    if n_max is None and os.environ.get(ENV_N_MAX):
        try:
            n_max = int(os.environ[ENV_N_MAX])
        except ValueError:
            stderr.write(f"error: {ENV_N_MAX} must be an integer\n")
            return EXIT_INPUT
    ctx = {"seed": args.seed, "n_max": n_max}
    try:
        doc = _load_document(args.input)
        if not isinstance(doc, dict):
            raise InputValidationError(["input document must be a JSON object"])
        doc.update(_overrides(args.params))
        if getattr(args, "kind", None):
            doc["kind"] = args.kind
        cfg = validate_input(doc, args.command)
        with tolerances(construction=args.tolerance):
            result = HANDLERS[args.command](cfg, ctx)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                _emit(result, args.command, args.output, fh, args)
        else:
            buf = io.StringIO()
            _emit(result, args.command, args.output, buf, args)
            stdout.write(buf.getvalue())
        return EXIT_OK
    except InputValidationError as exc:
        for problem in exc.problems:
            stderr.write(f"input error: {problem}\n")
        return EXIT_INPUT
    except InvariantError as exc:
        stderr.write(f"numerical failure: invariant '{exc.invariant}' violated: {exc}\n")
        return EXIT_NUMERIC
    except (np.linalg.LinAlgError, FloatingPointError, RuntimeError) as exc:
        stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (ValueError, TypeError, KeyError, OSError) as exc:
        stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT


def main(argv=None):
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
