"""Command-line front end: ``reduction-lab <command> --scenario FILE ...``.

Exit codes: 0 success, 1 validation or usage error, 2 numerical failure,
3 oracle mismatch.  Reports are JSON with a fixed key order and floats
written with 17 significant digits, so equal inputs give byte-equal output.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import NumericalError, ReductionError, ValidationError
from .oracle import compare_spectra, full_spectrum, oracle_report, partitioned_spectrum
from .pipeline import solve_problem
from .realisation import chi_square, expected_density, localization_report, sample
from .scenarios import (FIX_TS, build_two_slit, fixture_path, load_scenario, random_problem,
                        two_slit_report)
from .secular import curve_data, find_roots

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_ORACLE = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    command: str
    scenario: str = None
    out: str = None
    seed: int = 0
    n: int = 1000
    tolerances: object = DEFAULT_TOLERANCES
    channel: int = 0
    range: tuple = None
    points: int = 2001
    mode: str = "diagonal"
    random: int = 0
    corrupt_kernel: bool = False


class UsageError(ValidationError):
    code = "UsageError"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- output helpers ---------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(_plain(v) for v in obj)
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return format(obj, ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(obj)


def dumps(obj):
    """JSON text with insertion key order and 17-significant-digit floats."""
    return _encode(_plain(obj), 2, 0) + "\n"


def _fmt(x):
    return format(float(x), ".17g")


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _sidecar(path, suffix):
    return str(Path(path).with_suffix("")) + suffix


# --- commands ---------------------------------------------------------------

def _load(cfg):
    if cfg.scenario is None:
        raise UsageError("--scenario is required for this command")
    path = cfg.scenario
    if not os.path.exists(path):
        shipped = fixture_path(path)
        if shipped.is_file():
            path = str(shipped)
    return load_scenario(path)


def cmd_validate(cfg):
    problem = _load(cfg)
    summary = {
        "label": problem.label,
        "n_phi": problem.n_phi,
        "n_p": problem.n_p,
        "size": problem.size,
        "phi": problem.system.phi,
        "readings": problem.instrument.readings,
        "amplitudes_abs2": np.abs(problem.system.amplitudes) ** 2,
        "blocks": len(problem.coupling.blocks),
    }
    _write(dumps(summary), cfg.out)
    return EXIT_OK


def _solution_json(sol):
    counts = sol.counts
    roots = [{"n": sr.n, "p0n": sr.p0n, "roots": sr.roots, "diagnostics": {
        k: v for k, v in sr.diagnostics.items()}} for sr in sol.roots]
    reals = []
    for r in sol.realisations:
        loc = localization_report(r)
        reals.append({
            "i": r.i,
            "g": r.g,
            "C_re": r.C.real,
            "C_im": r.C.imag,
            "alpha": r.alpha,
            "roots": [[n, eta] for n, eta in r.roots],
            "c_linear": r.c,
            "weights_squared": r.weights,
            "channel_fractions": loc.channel_fractions,
            "own_channel_dominates": loc.own_channel_dominates,
            "max_residual": max(s.residual for s in r.states),
        })
    exp = expected_density(sol.realisations, sol.alphas)
    return {
        "label": sol.problem.label,
        "mode": sol.mode,
        "counts": {"N_s": counts.N_s, "N0_s": counts.N0_s, "N_R": counts.N_R},
        "roots": roots,
        "realisations": reals,
        "alphas": sol.alphas,
        "diagnostics": {
            "group_overlap": sol.classification.group_overlap,
            "complete": sol.classification.complete,
            "group_sizes": sol.classification.diagnostics["group_sizes"],
            "expected_channel_marginal": exp.channel_marginal,
        },
    }


def cmd_solve(cfg):
    problem = _load(cfg)
    sol = solve_problem(problem, cfg.mode, cfg.tolerances)
    _write(dumps(_solution_json(sol)), cfg.out)
    return EXIT_OK


def cmd_sample(cfg):
    if cfg.n < 0:
        raise UsageError("--n must be non-negative")
    problem = _load(cfg)
    sol = solve_problem(problem, cfg.mode, cfg.tolerances)
    records = sample(sol.realisations, sol.alphas, cfg.seed, cfg.n)
    rows = [(r.draw, r.realisation, r.reading_index, _fmt(r.root_value)) for r in records]
    _write(_csv_text(["draw", "realisation", "reading_index", "root_value"], rows), cfg.out)
    counts = np.bincount([r.realisation - 1 for r in records], minlength=len(sol.alphas))
    alphas = np.asarray(sol.alphas)
    freq = counts / cfg.n if cfg.n else np.zeros_like(alphas)
    sigma = np.sqrt(alphas * (1 - alphas) / cfg.n) if cfg.n else np.zeros_like(alphas)
    summary = {
        "seed": cfg.seed,
        "count": cfg.n,
        "alphas": alphas,
        "counts": counts,
        "frequencies": freq,
        "bound_4sigma": 4 * sigma,
        "within_4sigma": np.abs(freq - alphas) <= 4 * sigma,
        "chi_square": chi_square(records, alphas),
    }
    if cfg.out is not None:
        _write(dumps(summary), _sidecar(cfg.out, ".summary.json"))
    return EXIT_OK


def _corrupt(m, eta):
    return m + 1e-3 * np.eye(len(m))


def cmd_oracle(cfg):
    tol = cfg.tolerances
    hook = _corrupt if cfg.corrupt_kernel else None
    if cfg.random:
        rng = np.random.default_rng(cfg.seed)
        results = []
        for k in range(cfg.random):
            problem = random_problem(rng, int(rng.integers(1, 5)), int(rng.integers(1, 6)))
            rep = compare_spectra(partitioned_spectrum(problem, tol, hook), full_spectrum(problem),
                                  tol.oracle_tol)
            results.append(rep)
        passed = all(r.passed for r in results)
        report = {"method": "partitioned", "instances": len(results),
                  "pass_rate": sum(r.passed for r in results) / max(len(results), 1),
                  "max_gap": max((r.max_gap for r in results), default=0.0), "pass": passed}
    else:
        problem = _load(cfg)
        rep = oracle_report(problem, tol, hook, cfg.mode)
        passed = rep["passed"]
        part = rep["partitioned"]
        report = {
            "method": "partitioned",
            "count": len(part.values),
            "max_gap": part.max_gap,
            "pass": passed,
            "full": rep["full"].to_json(),
            "partitioned": dict(part.to_json(), scan_gaps=part.diagnostics.get("scan_gaps", [])),
            "secular_vs_full": {**rep["secular"].to_json(), "pass": None},
        }
    _write(dumps(report), cfg.out)
    return EXIT_OK if passed else EXIT_ORACLE


def cmd_plotdata(cfg):
    if cfg.out is None:
        raise UsageError("plotdata needs --out for the CSV and its poles sidecar")
    if cfg.points < 1:
        raise UsageError("--points must be positive")
    from .effective import solve_auxiliary
    from .secular import channel_constants

    problem = _load(cfg)
    if not 0 <= cfg.channel < problem.n_p:
        raise UsageError(f"--channel must be in 0..{problem.n_p - 1}")
    aux = solve_auxiliary(problem, cfg.mode)
    constants = channel_constants(problem, aux, cfg.channel)
    sr = find_roots(constants, cfg.tolerances)
    if cfg.range is None:
        pts = np.concatenate([sr.roots, constants.positions])
        lo, hi = pts.min() - 1.0, pts.max() + 1.0
    else:
        lo, hi = cfg.range
    rows = curve_data(constants, lo, hi, cfg.points, cfg.tolerances)
    _write(_csv_text(["eta", "secular_value", "line_value"],
                     [tuple(_fmt(v) for v in row) for row in rows]), cfg.out)
    side = {
        "channel": cfg.channel,
        "p0n": constants.p0n,
        "range": [lo, hi],
        "poles": [{"position": p.position, "residue": p.residue, "g": p.g, "n_prime": p.n_prime}
                  for p in sr.active.poles],
        "roots": sr.roots,
    }
    _write(dumps(side), _sidecar(cfg.out, ".poles.json"))
    return EXIT_OK


def cmd_twoslit(cfg):
    problem = _load(cfg) if cfg.scenario else build_two_slit(FIX_TS)
    rep = two_slit_report(problem, cfg.mode, cfg.tolerances)
    out = {
        "label": problem.label,
        "counts": {"N_s": rep.counts.N_s, "N0_s": rep.counts.N0_s, "N_R": rep.counts.N_R},
        "roots": rep.roots,
        "groups": {str(g): [[n, eta] for n, eta in v]
                   for g, v in sorted(rep.classification.groups.items())},
        "shared_roots": [[n, eta] for n, eta in rep.diagnostics["shared_roots"]],
        "alphas": rep.alphas,
        "localization": [{"g": r.g, "channel_fractions": loc.channel_fractions,
                          "own_channel_dominates": loc.own_channel_dominates}
                         for r, loc in zip(rep.realisations, rep.localization)],
        "interference_erasure": rep.diagnostics["interference_erasure"],
        "max_residual": rep.diagnostics["max_residual"],
    }
    _write(dumps(out), cfg.out)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "sample": cmd_sample,
    "oracle": cmd_oracle,
    "plotdata": cmd_plotdata,
    "twoslit": cmd_twoslit,
}


def _range(text):
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("range must look like LO:HI") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError("range needs LO < HI")
    return lo, hi


def build_parser():
    parser = _Parser(prog="reduction-lab", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--scenario")
    parser.add_argument("--out")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--tol", type=float, default=DEFAULT_TOLERANCES.oracle_tol,
                        help="oracle tolerance (relative gap)")
    parser.add_argument("--tol-root", type=float, default=DEFAULT_TOLERANCES.tol_root)
    parser.add_argument("--tol-pole", type=float, default=DEFAULT_TOLERANCES.tol_pole)
    parser.add_argument("--channel", type=int, default=0, help="instrument baseline state n (0-based)")
    parser.add_argument("--range", type=_range)
    parser.add_argument("--points", type=int, default=2001)
    parser.add_argument("--mode", choices=["diagonal", "full"], default="diagonal")
    parser.add_argument("--random", type=int, default=0,
                        help="oracle: check this many random problems instead of a scenario")
    parser.add_argument("--corrupt-kernel", action="store_true", help=argparse.SUPPRESS)
    return parser


def parse_config(argv):
    args = build_parser().parse_args(argv)
    try:
        tolerances = replace(DEFAULT_TOLERANCES, oracle_tol=args.tol, tol_root=args.tol_root,
                             tol_pole=args.tol_pole)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    seed = args.seed
    env = os.environ.get("REDLAB_SEED")
    if env is not None and env != "":
        try:
            seed = int(env)
        except ValueError:
            raise UsageError(f"REDLAB_SEED must be an integer, got {env!r}") from None
    if not 0 <= seed < 2 ** 64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    return RunConfig(args.command, args.scenario, args.out, seed, args.n, tolerances,
                     args.channel, args.range, args.points, args.mode, args.random,
                     args.corrupt_kernel)


def _fail(exc, code):
    sys.stderr.write(json.dumps({"error": getattr(exc, "code", type(exc).__name__),
                                 "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None):
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg)
    except ValidationError as exc:
        return _fail(exc, EXIT_VALIDATION)
    except NumericalError as exc:
        return _fail(exc, EXIT_NUMERICAL)
    except ReductionError as exc:
        return _fail(exc, EXIT_NUMERICAL)
    except np.linalg.LinAlgError as exc:
        return _fail(exc, EXIT_NUMERICAL)


if __name__ == "__main__":
    sys.exit(main())
