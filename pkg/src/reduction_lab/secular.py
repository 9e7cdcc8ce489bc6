"""Scalar multi-branch secular equation of the effective channel problem.

For instrument baseline state ``n`` the effective equation projected on that
state reads ``V_nn(eta) = eta - P0_n`` with

    V_nn(eta) = sum_k r_k / (eta - x_k),

a sum of simple poles at the auxiliary levels ``x_k`` (shifted by the channel
energy) with residues ``r_k = |<n|V[0, g]|aux_k>|**2``.  Between two
consecutive poles the left side falls from +inf to -inf while the line rises,
so every open inter-pole interval holds exactly one root, plus one root on
each flank.
"""

from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOLERANCES
from .effective import pole_table
from .errors import BracketFailure, PoleEvaluation

SHARED = -1

Pole = namedtuple("Pole", "position residue g n_prime")


@dataclass(frozen=True, eq=False)
class ChannelConstants:
    """Secular data of one instrument baseline state ``n``.

    Pole arrays are sorted by position.  ``g`` is the source channel of each
    pole (``SHARED`` for poles merged from several channels) and
    ``n_prime`` its auxiliary level index.
    """

    n: int
    p0n: float
    positions: np.ndarray
    residues: np.ndarray
    g: np.ndarray
    n_prime: np.ndarray
    members: tuple = ()

    def __post_init__(self):
        order = np.argsort(self.positions, kind="stable")
        for name, dtype in (("positions", float), ("residues", float), ("g", int), ("n_prime", int)):
            arr = np.asarray(getattr(self, name), dtype=dtype)[order]
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not self.members:
            members = tuple(frozenset([int(x)]) for x in self.g)
        else:
            members = tuple(self.members[i] for i in order)
        object.__setattr__(self, "members", members)
        if np.any(self.residues < 0) or not np.all(np.isfinite(self.positions)):
            raise ValueError("residues must be non-negative and positions finite")

    @property
    def poles(self):
        return [Pole(*t) for t in zip(self.positions.tolist(), self.residues.tolist(),
                                       self.g.tolist(), self.n_prime.tolist())]

    def shifted(self, c):
        """Constants with every pole and ``P0_n`` moved by ``c``."""
        return ChannelConstants(self.n, self.p0n + c, self.positions + c, self.residues,
                                self.g, self.n_prime, self.members)


@dataclass(frozen=True, eq=False)
class SecularRoots:
    """Roots of one channel, ascending, with the bracketing pole interval of each.

    ``brackets[k]`` is ``(lo, hi)``; flank roots use ``-inf``/``inf`` for the
    open side.  ``bracket_members[k]`` holds the channel sets of the two
    bounding poles (``None`` on an open side).
    """

    n: int
    p0n: float
    roots: np.ndarray
    brackets: list
    bracket_members: list
    residuals: np.ndarray
    active: ChannelConstants
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.roots)


@dataclass(frozen=True)
class SolutionCounts:
    N_s: int
    N0_s: int
    N_R: int


def channel_constants(problem, aux, n):
    """Poles, residues and ``P0_n`` for baseline state ``n``.

    The baseline modes are the unperturbed instrument states, so
    ``P0_n = p0_n + V[0, 0][n, n]`` and the residue of auxiliary level ``k``
    is ``|(W u_k)_n|**2``.
    """
    positions, b, channels, indices, _ = pole_table(problem, aux)
    p0n = float(problem.instrument.readings[n] + problem.block(0, 0)[n, n].real)
    return ChannelConstants(n, p0n, positions, np.abs(b[n, :]) ** 2, channels, indices)


def active_poles(constants, tol=DEFAULT_TOLERANCES):
    """Drop negligible residues and merge coincident poles.

    Poles with residue ``<= tol_residue * max(residue)`` are removable and
    deactivated.  Poles closer than ``tol_pole * max(1, |x|)`` are merged into
    one pole carrying the summed residue; a merge across channels is labelled
    ``SHARED``.  Returns ``(active_constants, deactivated_count, merged_count)``.
    """
    res = constants.residues
    rmax = res.max(initial=0.0)
    keep = res > tol.tol_residue * rmax if rmax > 0 else np.zeros(len(res), bool)
    pos, r = constants.positions[keep], res[keep]
    gs, nps = constants.g[keep], constants.n_prime[keep]
    mem = [m for m, k in zip(constants.members, keep) if k]
    out_pos, out_res, out_g, out_np, out_mem = [], [], [], [], []
    merged = 0
    for k in range(len(pos)):
        if out_pos and abs(pos[k] - out_pos[-1]) < tol.tol_pole * max(1.0, abs(pos[k])):
            weight = out_res[-1] + r[k]
            out_pos[-1] = (out_pos[-1] * out_res[-1] + pos[k] * r[k]) / weight
            out_res[-1] = weight
            out_mem[-1] = out_mem[-1] | mem[k]
            out_g[-1] = next(iter(out_mem[-1])) if len(out_mem[-1]) == 1 else SHARED
            merged += 1
            continue
        out_pos.append(pos[k])
        out_res.append(r[k])
        out_g.append(int(gs[k]))
        out_np.append(int(nps[k]))
        out_mem.append(mem[k])
    active = ChannelConstants(constants.n, constants.p0n, np.array(out_pos, float),
                              np.array(out_res, float), np.array(out_g, int),
                              np.array(out_np, int), tuple(out_mem))
    return active, int(len(res) - keep.sum()), merged


def secular_value(constants, eta):
    """``sum r_k / (eta - x_k)`` over poles with nonzero residue."""
    nz = constants.residues > 0
    d = eta - constants.positions[nz]
    if np.any(d == 0):
        raise PoleEvaluation(f"secular function evaluated exactly at a pole ({eta!r})")
    return float(np.sum(constants.residues[nz] / d))


def count_solutions(N_Phi, N_P):
    if N_Phi < 1 or N_P < 1:
        raise ValueError("N_Phi and N_P must be at least 1")
    n_s = N_Phi * N_P + 1
    n0 = N_P + 1
    return SolutionCounts(n_s, n0, int(np.floor(n_s / n0 + 0.5)))


def _bracketed_solve(func, lo, hi, flo, fhi, rtol, max_iter):
    """Illinois false position with a bisection safeguard.

    Requires ``flo > 0 > fhi``.  Stops once the bracket is at most
    ``max(rtol * |x|, 2 ulp)`` wide.  Returns ``(x, iterations)``.
    """
    side = 0
    width = hi - lo
    wlo, whi = flo, fhi  # Illinois-weighted copies
    for it in range(max_iter):
        if hi - lo <= max(rtol * abs(0.5 * (lo + hi)), 2 * np.spacing(max(abs(lo), abs(hi)))):
            break
        x = hi - whi * (hi - lo) / (whi - wlo)
        # bisect when the secant point is off-bracket or progress stalls
        if not (lo < x < hi) or (it % 3 == 2 and hi - lo > 0.5 * width):
            x = 0.5 * (lo + hi)
        if it % 3 == 2:
            width = hi - lo
        fx = func(x)
        if fx == 0:
            return x, it + 1
        if fx > 0:
            lo, flo, wlo = x, fx, fx
            if side == 1:
                whi *= 0.5
            side = 1
        else:
            hi, fhi, whi = x, fx, fx
            if side == -1:
                wlo *= 0.5
            side = -1
    else:
        return (lo if abs(flo) <= abs(fhi) else hi), max_iter
    return (lo if abs(flo) <= abs(fhi) else hi), it


def _interval_function(positions, residues, p0n, k_lo, k_hi):
    """Secular mismatch multiplied by the distance to the bounding pole(s).

    The product stays finite at the bounding poles and has the same sign as
    ``V(eta) - (eta - P0)`` inside the interval.
    """
    mask = np.ones(len(positions), bool)
    bound = [k for k in (k_lo, k_hi) if k is not None]
    mask[bound] = False
    others_x, others_r = positions[mask], residues[mask]

    def f(eta):
        rest = np.sum(others_r / (eta - others_x)) - (eta - p0n)
        if k_lo is not None and k_hi is not None:
            a, b = positions[k_lo], positions[k_hi]
            return (eta - a) * (b - eta) * rest + residues[k_lo] * (b - eta) - residues[k_hi] * (eta - a)
        if k_lo is not None:
            a = positions[k_lo]
            return (eta - a) * rest + residues[k_lo]
        b = positions[k_hi]
        return (b - eta) * rest - residues[k_hi]

    return f


def find_roots(constants, tol=DEFAULT_TOLERANCES):
    """All real roots of ``V_nn(eta) = eta - P0_n``.

    Poles are first filtered and merged (see ``active_poles``).  With ``k``
    active poles the result has ``k + 1`` roots, one in every inter-pole
    interval and one on each flank.
    """
    active, deactivated, merged = active_poles(constants, tol)
    diagnostics = {"deactivated": deactivated, "merged": merged, "bracket_failures": 0,
                   "max_iter_hit": 0}
    rtol = 0.0  # iterate down to a 2-ulp bracket
    while True:
        x, r = active.positions, active.residues
        p0n = active.p0n
        k = len(x)
        if k == 0:
            roots = np.array([p0n])
            return SecularRoots(constants.n, p0n, roots, [(-np.inf, np.inf)], [(None, None)],
                                np.zeros(1), active, diagnostics)
        total = float(np.sum(r))
        spread = np.sqrt(total) + 1.0
        intervals = [(None, 0)] + [(j, j + 1) for j in range(k - 1)] + [(k - 1, None)]
        roots, brackets, members, failed = [], [], [], None
        for k_lo, k_hi in intervals:
            func = _interval_function(x, r, p0n, k_lo, k_hi)
            lo = x[k_lo] if k_lo is not None else min(x[0], p0n) - spread
            hi = x[k_hi] if k_hi is not None else max(x[-1], p0n) + spread
            flo, fhi = func(lo), func(hi)
            if not (flo > 0 > fhi):
                failed = (k_lo, k_hi)
                break
            root, iters = _bracketed_solve(func, lo, hi, flo, fhi, rtol, tol.max_iter)
            # keep the root strictly inside its interval
            if k_lo is not None and root <= x[k_lo]:
                root = np.nextafter(x[k_lo], np.inf)
            if k_hi is not None and root >= x[k_hi]:
                root = np.nextafter(x[k_hi], -np.inf)
            if iters >= tol.max_iter:
                diagnostics["max_iter_hit"] += 1
            roots.append(root)
            brackets.append((x[k_lo] if k_lo is not None else -np.inf,
                             x[k_hi] if k_hi is not None else np.inf))
            members.append((active.members[k_lo] if k_lo is not None else None,
                            active.members[k_hi] if k_hi is not None else None))
        if failed is None:
            break
        # no sign change: drop the weaker bounding pole and retry
        diagnostics["bracket_failures"] += 1
        cand = [j for j in failed if j is not None]
        if not cand:
            raise BracketFailure("no sign change for the pole-free secular equation")
        drop = min(cand, key=lambda j: r[j])
        keep = np.ones(k, bool)
        keep[drop] = False
        active = ChannelConstants(active.n, active.p0n, x[keep], r[keep], active.g[keep],
                                  active.n_prime[keep],
                                  tuple(m for m, kk in zip(active.members, keep) if kk))
    roots = np.array(roots)
    residuals = np.array([abs(secular_value(active, e) - (e - p0n)) for e in roots])
    diagnostics["residual_ok"] = bool(np.all(root_resolved(active, roots, brackets, tol)))
    return SecularRoots(constants.n, p0n, roots, brackets, members, residuals, active, diagnostics)


def secular_slope(constants, eta):
    """Derivative of ``V_nn(eta) - (eta - P0_n)``."""
    nz = constants.residues > 0
    return float(-np.sum(constants.residues[nz] / (eta - constants.positions[nz]) ** 2) - 1.0)


def _signed_mismatch(constants, eta, side):
    """``V_nn(eta) - (eta - P0_n)``; at a pole, the one-sided limit's sign (``side`` = +-1)."""
    try:
        return secular_value(constants, eta) - (eta - constants.p0n)
    except PoleEvaluation:
        return np.inf if side > 0 else -np.inf


def root_resolved(constants, roots, brackets=None, tol=DEFAULT_TOLERANCES):
    """Whether each root meets the residual tolerance.

    A root passes if ``|V_nn - (eta - P0_n)| <= tol_root * (1 + |eta|)`` or,
    when that is out of reach in double precision, if the mismatch changes
    sign within two ulps of ``eta`` (clipped to the root's bracket, whose
    bounding poles count as +inf on the left and -inf on the right).
    """
    roots = np.atleast_1d(np.asarray(roots, dtype=float))
    if brackets is None:
        brackets = [(-np.inf, np.inf)] * len(roots)
    out = []
    for eta, (a, b) in zip(roots, brackets):
        f = _signed_mismatch(constants, eta, 1)
        if abs(f) <= tol.tol_root * (1.0 + abs(eta)):
            out.append(True)
            continue
        lo = np.nextafter(np.nextafter(eta, -np.inf), -np.inf)
        hi = np.nextafter(np.nextafter(eta, np.inf), np.inf)
        f_lo = np.inf if lo <= a else _signed_mismatch(constants, lo, 1)
        f_hi = -np.inf if hi >= b else _signed_mismatch(constants, hi, -1)
        out.append(bool(f_lo > 0 > f_hi))
    return np.array(out, dtype=bool)


@dataclass(frozen=True, eq=False)
class RootLabel:
    n: int
    index: int
    eta: float
    members: frozenset

    @property
    def shared(self):
        return len(self.members) > 1

    @property
    def g(self):
        return next(iter(self.members)) if len(self.members) == 1 else SHARED


@dataclass(frozen=True, eq=False)
class Classification:
    """Root-to-realisation assignment.

    ``labels[c]`` lists a ``RootLabel`` per root of the ``c``-th channel;
    ``groups`` maps each measured channel ``g`` found to its ``(n, eta)``
    pairs in channel order (shared roots appear in every adjacent group).
    """

    labels: list
    groups: dict
    group_overlap: bool
    counts: SolutionCounts
    complete: bool
    diagnostics: dict

    @property
    def n_realisations(self):
        return len(self.groups)


def _grouped(labels):
    seen, last = set(), None
    for g in labels:
        if g == SHARED:
            continue
        if g != last and g in seen:
            return False
        seen.add(g)
        last = g
    return True


def _majority(active, eta, width):
    d = np.abs(active.positions - eta)
    near = np.argsort(d, kind="stable")[:width]
    votes = {}
    for j in near:
        for g in active.members[j]:
            votes[g] = votes.get(g, 0) + 1
    best = max(votes.values())
    return frozenset(g for g, v in votes.items() if v == best)


def classify_realisations(roots, constants=None, n_phi=None, n_p=None):
    """Assign each root to the measured channel(s) whose poles bound it.

    A root between two poles of one channel belongs to that channel.  A root
    between poles of two different channels is shared by both; a flank root
    belongs to the single adjacent channel.  Poles merged across channels
    count as belonging to each of their channels.  If the pole groups of
    different channels interleave, every root instead joins the majority
    channel among its ``N_P`` nearest poles and ``group_overlap`` is set.
    """
    if n_p is None:
        n_p = len(roots)
    labels = []
    overlap = False
    for sr in roots:
        active = sr.active
        ordered = [m for m in active.members]
        single = [next(iter(m)) if len(m) == 1 else SHARED for m in ordered]
        ok = _grouped(single)
        overlap = overlap or not ok
        chan = []
        for idx, (eta, (lo, hi)) in enumerate(zip(sr.roots, sr.bracket_members)):
            if not ok:
                members = _majority(active, eta, max(n_p, 1))
            elif lo is None and hi is None:
                members = frozenset()
            elif lo is None:
                members = hi
            elif hi is None:
                members = lo
            else:
                common = lo & hi
                members = common if common else lo | hi
            chan.append(RootLabel(sr.n, idx, float(eta), frozenset(members)))
        labels.append(chan)

    found = sorted({g for chan in labels for lab in chan for g in lab.members})
    groups = {g: [(lab.n, lab.eta) for chan in labels for lab in chan if g in lab.members]
              for g in found}
    if n_phi is None:
        n_phi = max(len(found), 1)
    counts = count_solutions(n_phi, n_p)
    expected = counts.N0_s * len(roots)
    complete = all(len(v) == expected for v in groups.values())
    diagnostics = {
        "group_sizes": {int(g): len(v) for g, v in groups.items()},
        "n_realisations_found": len(found),
        "deviates_from_count_law": len(found) != counts.N_R,
    }
    return Classification(labels, groups, overlap, counts, complete, diagnostics)


def chaos_border_ratio(problem):
    """Mean reading spacing over mean measured-eigenvalue spacing (diagnostic only)."""
    p = np.sort(problem.instrument.readings)
    phi = np.sort(problem.system.phi[1:])
    dp = np.mean(np.diff(p)) if len(p) > 1 else np.nan
    dphi = np.mean(np.diff(phi)) if len(phi) > 1 else np.nan
    return float(dp / dphi) if np.isfinite(dp) and np.isfinite(dphi) and dphi != 0 else float("nan")


def curve_data(constants, lo, hi, points, tol=DEFAULT_TOLERANCES):
    """Sample ``(eta, V_nn(eta), eta - P0_n)`` on a uniform grid.

    Grid points within ``tol_pole`` (relative to local spacing) of an active
    pole are skipped.
    """
    active, _, _ = active_poles(constants, tol)
    grid = np.linspace(lo, hi, points) if points > 1 else np.array([lo])
    rows = []
    x = active.positions
    for eta in grid:
        if len(x):
            d = np.abs(x - eta)
            j = int(np.argmin(d))
            gaps = np.abs(np.diff(x))
            local = [gaps[j - 1]] if j > 0 else []
            if j < len(gaps):
                local.append(gaps[j])
            local = [s for s in local if s > 0]
            scale = min(local) if local else 1.0
            if d[j] <= tol.tol_pole * scale:
                continue
        rows.append((float(eta), secular_value(active, eta), float(eta - active.p0n)))
    return rows
