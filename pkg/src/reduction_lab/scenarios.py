"""Canonical fixtures, the two-slit-with-detectors builder and the scenario file format.

In the two-slit model a particle passes either of two point holes at
``X_1 = -D/2`` and ``X_2 = +D/2``, each watched by a detector; channel 0 is
the blocked part of the screen.  The measured channels carry energies
``phi = (0, X_1, X_2)`` and the instrument readings are the detector
positions.  Detector ``g`` couples to the blocked channel through a rank-one
block ``v_g u_g u_g^T`` whose profile ``u_g`` sits on instrument state ``g``
with a small ``leakage`` onto the other state.
"""

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import ParseError, SchemaError
from .model import (CouplingSpec, InstrumentSpec, MeasurementProblem, SystemSpec,
                    validate_problem)
from .pipeline import solve_problem
from .realisation import interference_erasure, localization_report
from .secular import curve_data

SQRT_HALF = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class TwoSlitConfig:
    """Physical parameters of the two-detector scenario.

    ``delta[g - 1][n]`` shifts reading ``n`` inside detector channel ``g``.
    """

    D: float = 2.0
    amp: tuple = (SQRT_HALF, SQRT_HALF)
    coupling_strength: tuple = (0.2, 0.2)
    cross_coupling: float = 0.0
    delta: tuple = ((0.0, 0.0), (0.0, 0.0))
    background_level: float = 0.0
    leakage: float = 0.1
    label: str = "two-slit"

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError("detector separation D must be positive")
        if len(self.amp) != 2 or len(self.coupling_strength) != 2:
            raise ValueError("two amplitudes and two coupling strengths are required")
        if min(self.coupling_strength) < 0:
            raise ValueError("coupling strengths must be non-negative")
        if np.shape(self.delta) != (2, 2):
            raise ValueError("delta must be a 2x2 table")

    @property
    def detector_positions(self):
        return (-self.D / 2.0, self.D / 2.0)


# Detector offsets that pull each detector's foreign reading towards the
# centre; this keeps the four poles distinct and produces the fifth,
# near-centre solution shared by both realisations.
ATTRACTION = ((0.0, -0.1), (0.1, 0.0))

FIX_TS = TwoSlitConfig(delta=ATTRACTION, label="FIX-TS")
FIX_TA = TwoSlitConfig(amp=(0.6, 0.8), delta=ATTRACTION, label="FIX-TA")


def detector_profiles(leakage):
    return np.array([[1.0, leakage], [leakage, 1.0]])


def build_two_slit(config):
    """Measurement problem of the two-slit-with-detectors scenario."""
    x1, x2 = config.detector_positions
    u = detector_profiles(config.leakage)
    v = config.coupling_strength
    blocks = {(0, 0): config.background_level * np.eye(2)}
    for g in (1, 2):
        blocks[(0, g)] = v[g - 1] * np.outer(u[g - 1], u[g - 1])
        blocks[(g, g)] = np.diag(np.asarray(config.delta[g - 1], dtype=float))
    if config.cross_coupling:
        blocks[(1, 2)] = config.cross_coupling * np.outer(u[0], u[1])
    raw = MeasurementProblem(
        system=SystemSpec([0.0, x1, x2], np.asarray(config.amp, dtype=complex)),
        instrument=InstrumentSpec([x1, x2]),
        coupling=CouplingSpec(blocks),
        label=config.label,
    )
    return validate_problem(raw)


def scalar_problem(v=1.0, d=0.0):
    """Smallest nontrivial problem: ``[[0, v], [v, d]]`` on one reading."""
    raw = MeasurementProblem(
        system=SystemSpec([0.0, d], [1.0]),
        instrument=InstrumentSpec([0.0]),
        coupling=CouplingSpec({(0, 1): np.array([[v]])}),
        label="scalar",
    )
    return validate_problem(raw)


def random_problem(rng, n_phi, n_p, scale=1.0, label="random"):
    """Random Hermitian problem with complex couplings (used by the oracle suites)."""
    def herm(k):
        a = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        return 0.5 * (a + a.conj().T)

    blocks = {}
    for g in range(n_phi + 1):
        blocks[(g, g)] = scale * 0.3 * herm(n_p)
        for gp in range(g + 1, n_phi + 1):
            blocks[(g, gp)] = scale * (rng.normal(size=(n_p, n_p)) + 1j * rng.normal(size=(n_p, n_p))) * 0.3
    phi = np.concatenate([[0.0], np.sort(rng.normal(size=n_phi) * 2.0)])
    amps = rng.normal(size=n_phi) + 1j * rng.normal(size=n_phi)
    raw = MeasurementProblem(
        system=SystemSpec(phi, amps),
        instrument=InstrumentSpec(np.sort(rng.normal(size=n_p))),
        coupling=CouplingSpec(blocks),
        label=label,
    )
    return validate_problem(raw)


@dataclass(frozen=True, eq=False)
class TwoSlitReport:
    roots: list
    classification: object
    realisations: list
    alphas: list
    localization: list
    curve: list
    counts: object
    diagnostics: dict = field(default_factory=dict)


def two_slit_report(problem, mode="diagonal", tol=DEFAULT_TOLERANCES, points=401):
    """Run the pipeline on a two-detector problem and package the headline results."""
    sol = solve_problem(problem, mode, tol)
    loc = [localization_report(r) for r in sol.realisations]
    curves = []
    for c, sr in zip(sol.constants, sol.roots):
        lo = min(sr.roots.min(), c.positions.min()) - 1.0
        hi = max(sr.roots.max(), c.positions.max()) + 1.0
        curves.append(curve_data(c, lo, hi, points, tol))
    shared = [lab for chan in sol.classification.labels for lab in chan if lab.shared]
    diagnostics = {
        "shared_roots": [(lab.n, lab.eta) for lab in shared],
        "max_residual": max((s.residual for r in sol.realisations for s in r.states), default=0.0),
        "interference_erasure": interference_erasure(sol.realisations),
    }
    return TwoSlitReport([sr.roots for sr in sol.roots], sol.classification, sol.realisations,
                         sol.alphas, loc, curves, sol.counts, diagnostics)


# --- scenario files --------------------------------------------------------

_TOP_KEYS = {"label", "system", "instrument", "coupling", "background_level"}
_SYSTEM_KEYS = {"phi", "amp_re", "amp_im"}
_INSTRUMENT_KEYS = {"readings", "ground_re", "ground_im"}
_BLOCK_KEYS = {"g", "gp", "re", "im"}


def _check_keys(obj, allowed, required, where):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where} must be an object")
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise SchemaError(f"missing keys in {where}: {sorted(missing)}")


def _real_list(obj, where):
    arr = np.asarray(obj, dtype=object)
    if arr.ndim != 1 or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in arr):
        raise SchemaError(f"{where} must be a list of numbers")
    return np.array(arr, dtype=float)


def _real_matrix(obj, n, where):
    if not isinstance(obj, list) or len(obj) != n or any(not isinstance(r, list) or len(r) != n for r in obj):
        raise SchemaError(f"{where} must be a {n}x{n} matrix")
    return np.array([_real_list(r, where) for r in obj], dtype=float)


def problem_from_dict(data):
    """Decode the scenario schema into a validated problem (strict)."""
    _check_keys(data, _TOP_KEYS, {"system", "instrument"}, "scenario")
    sysd, insd = data["system"], data["instrument"]
    _check_keys(sysd, _SYSTEM_KEYS, {"phi", "amp_re"}, "system")
    _check_keys(insd, _INSTRUMENT_KEYS, {"readings"}, "instrument")
    phi = _real_list(sysd["phi"], "system.phi")
    amp_re = _real_list(sysd["amp_re"], "system.amp_re")
    amp_im = _real_list(sysd.get("amp_im", [0.0] * len(amp_re)), "system.amp_im")
    if amp_re.shape != amp_im.shape:
        raise SchemaError("system.amp_re and system.amp_im differ in length")
    readings = _real_list(insd["readings"], "instrument.readings")
    n_p = len(readings)
    ground = None
    if "ground_re" in insd:
        g_re = _real_list(insd["ground_re"], "instrument.ground_re")
        g_im = _real_list(insd.get("ground_im", [0.0] * len(g_re)), "instrument.ground_im")
        if g_re.shape != g_im.shape:
            raise SchemaError("instrument.ground_re and instrument.ground_im differ in length")
        ground = g_re + 1j * g_im
    elif "ground_im" in insd:
        raise SchemaError("instrument.ground_im given without ground_re")

    blocks = {}
    coupling = data.get("coupling", {"blocks": []})
    _check_keys(coupling, {"blocks"}, {"blocks"}, "coupling")
    if not isinstance(coupling["blocks"], list):
        raise SchemaError("coupling.blocks must be a list")
    for k, b in enumerate(coupling["blocks"]):
        where = f"coupling.blocks[{k}]"
        _check_keys(b, _BLOCK_KEYS, {"g", "gp", "re"}, where)
        if not all(isinstance(b[key], int) and not isinstance(b[key], bool) for key in ("g", "gp")):
            raise SchemaError(f"{where}: g and gp must be integers")
        re = _real_matrix(b["re"], n_p, where + ".re")
        im = _real_matrix(b["im"], n_p, where + ".im") if "im" in b else np.zeros_like(re)
        key = (b["g"], b["gp"])
        if key in blocks:
            raise SchemaError(f"{where}: duplicate block {key}")
        blocks[key] = re + 1j * im

    level = data.get("background_level", 0.0)
    if not isinstance(level, (int, float)) or isinstance(level, bool):
        raise SchemaError("background_level must be a number")
    if level:
        blocks[(0, 0)] = blocks.get((0, 0), np.zeros((n_p, n_p), complex)) + level * np.eye(n_p)

    label = data.get("label", "")
    if not isinstance(label, str):
        raise SchemaError("label must be a string")
    raw = MeasurementProblem(
        system=SystemSpec(phi, amp_re + 1j * amp_im),
        instrument=InstrumentSpec(readings, ground),
        coupling=CouplingSpec(blocks),
        label=label,
    )
    return validate_problem(raw)


def problem_to_dict(problem):
    """Encode a problem in the scenario schema (every block written, background folded in)."""
    amps = problem.system.amplitudes
    gw = problem.instrument.ground_weights
    blocks = []
    for (g, gp) in sorted(problem.coupling.blocks):
        b = problem.block(g, gp)
        if not np.any(b):
            continue
        blocks.append({"g": g, "gp": gp, "re": b.real.tolist(), "im": b.imag.tolist()})
    return {
        "label": problem.label,
        "system": {"phi": problem.system.phi.tolist(), "amp_re": amps.real.tolist(),
                   "amp_im": amps.imag.tolist()},
        "instrument": {"readings": problem.instrument.readings.tolist(),
                       "ground_re": gw.real.tolist(), "ground_im": gw.imag.tolist()},
        "coupling": {"blocks": blocks},
        "background_level": 0.0,
    }


def load_scenario(path):
    """Read and validate a scenario file.

    Raises
    ------
    ParseError
        The file is missing or not valid JSON.
    SchemaError
        The content does not follow the scenario schema.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read scenario {path}: {exc}") from exc
    return problem_from_dict(data)


def dump_scenario(problem, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(problem), fh, indent=2)
        fh.write("\n")


def fixture_path(name):
    """Path of a shipped fixture file, e.g. ``fixture_path("FIX-TS")``."""
    return resources.files("reduction_lab").joinpath("fixtures", f"{name}.json")
