"""Brute-force verifiers for the reduction.

Nothing here reuses the secular root finder.  ``full_spectrum`` diagonalizes
the coupled operator directly; ``inertia_eigenvalues`` recovers the same
values by Sylvester-inertia bisection; ``partitioned_spectrum`` solves the
channel-0 problem with the energy-dependent kernel as a nonlinear eigenvalue
problem; ``grid_bisect_roots`` scans the scalar secular equation on a grid.
"""

from dataclasses import dataclass, field

import mpmath
import numpy as np
import scipy.linalg

from .config import DEFAULT_TOLERANCES
from .effective import coupling_row, pole_table, solve_auxiliary
from .errors import CountMismatch, EigenFailure
from .model import build_full_hamiltonian
from .secular import SecularRoots, active_poles, channel_constants

MAX_FULL_SIZE = 512


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    """Sorted real values from one method plus, after comparison, the pairing table.

    ``matched`` rows are ``(value, partner, abs_gap, rel_gap)``.
    """

    method: str
    values: np.ndarray
    matched: list = field(default_factory=list)
    max_gap: float = 0.0
    passed: bool = None
    diagnostics: dict = field(default_factory=dict)

    def to_json(self):
        return {"method": self.method, "count": int(len(self.values)),
                "max_gap": float(self.max_gap), "pass": self.passed}


def full_spectrum(problem):
    """All eigenvalues of the coupled operator by dense Hermitian diagonalization."""
    if problem.size > MAX_FULL_SIZE:
        raise ValueError(f"full spectrum capped at size {MAX_FULL_SIZE}, got {problem.size}")
    h = build_full_hamiltonian(problem)
    try:
        values = scipy.linalg.eigvalsh(h)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenFailure(str(exc)) from exc
    return SpectrumReport("full", np.sort(values))


def negative_count(h, shift):
    """Number of eigenvalues of Hermitian ``h`` below ``shift`` (Sylvester inertia of LDL^T)."""
    _, d, _ = scipy.linalg.ldl(h - shift * np.eye(len(h)), hermitian=True)
    # d is block diagonal with 1x1 and 2x2 blocks; its inertia equals that of h - shift
    return int(np.sum(np.linalg.eigvalsh(d) < 0))


def inertia_eigenvalues(h, rtol=1e-15):
    """Eigenvalues of a small Hermitian matrix by bisection on the inertia count."""
    h = np.asarray(h, dtype=complex)
    radius = float(np.max(np.sum(np.abs(h), axis=1)))  # Gershgorin bound
    lo0, hi0 = -radius - 1.0, radius + 1.0
    out = []
    for k in range(len(h)):
        lo, hi = lo0, hi0
        # smallest x with at least k + 1 eigenvalues below it
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if negative_count(h, mid) >= k + 1:
                hi = mid
            else:
                lo = mid
            if hi - lo <= rtol * max(1.0, abs(mid)):
                break
        out.append(0.5 * (lo + hi))
    return np.array(out)


def _kernel_matrix(table, eta, hook):
    base, positions, b = table
    m = base + (b / (eta - positions)) @ b.conj().T
    if hook is not None:
        m = hook(m, eta)
    return m - eta * np.eye(len(base))


def _positive_count(table, eta, hook):
    m = _kernel_matrix(table, eta, hook)
    return int(np.sum(np.linalg.eigvalsh(0.5 * (m + m.conj().T)) > 0))


def partitioned_spectrum(problem, tol=DEFAULT_TOLERANCES, kernel_hook=None):
    """Solve ``det(diag(p0) + V_eff(eta) - eta) = 0`` over the whole real line.

    The auxiliary problems are solved in full mode, so the channel-0 problem
    is an exact partitioning of the coupled operator.  Between consecutive
    poles ``diag(p0) + V_eff(eta) - eta`` is strictly decreasing, so the
    number of its positive eigenvalues can only drop, once per root; roots
    are counted from that inertia and isolated by bisection.  ``kernel_hook``
    (``f(matrix, eta) -> matrix``) perturbs the kernel for negative controls.
    """
    aux = solve_auxiliary(problem, "full")
    positions, b, _, _, _ = pole_table(problem, aux)
    live = np.any(np.abs(b) > 0, axis=0)
    poles = np.unique(positions[live])
    base = np.diag(problem.instrument.readings) + problem.block(0, 0)
    table = (base, positions[live], b[:, live])
    wnorm = np.linalg.norm(coupling_row(problem), 2)
    a_eigs = np.linalg.eigvalsh(base)
    lo = min(a_eigs.min(), poles.min(initial=np.inf)) - (wnorm + 1.0)
    hi = max(a_eigs.max(), poles.max(initial=-np.inf)) + (wnorm + 1.0)
    edges = np.concatenate([[lo], poles, [hi]])
    values, gaps = [], []
    for a, c in zip(edges[:-1], edges[1:]):
        span = c - a
        nudge = 1e-11 * max(span, 1e-300)
        left, right = a + nudge, c - nudge
        if not left < right:
            continue
        n_left = _positive_count(table, left, kernel_hook)
        n_right = _positive_count(table, right, kernel_hook)
        if n_left < n_right:
            gaps.append((float(a), float(c)))
            continue
        for j in range(1, n_left - n_right + 1):
            x0, x1 = left, right
            for _ in range(200):
                mid = 0.5 * (x0 + x1)
                if mid in (x0, x1):
                    break
                if _positive_count(table, mid, kernel_hook) <= n_left - j:
                    x1 = mid
                else:
                    x0 = mid
            values.append(0.5 * (x0 + x1))
    return SpectrumReport("partitioned", np.sort(np.array(values)),
                          diagnostics={"scan_gaps": gaps, "poles": poles.tolist()})


def channel_zero_weights(problem):
    """Eigenvalues of the full operator with the channel-0 weight of each eigenvector."""
    h = build_full_hamiltonian(problem)
    w, v = np.linalg.eigh(h)
    return w, np.sum(np.abs(v[:problem.n_p, :]) ** 2, axis=0)


def secular_spectrum(problem, mode="diagonal", tol=DEFAULT_TOLERANCES):
    """Union of the scalar secular roots of every baseline state."""
    from .secular import find_roots

    aux = solve_auxiliary(problem, mode)
    roots = [find_roots(channel_constants(problem, aux, n), tol).roots for n in range(problem.n_p)]
    return SpectrumReport("secular", np.sort(np.concatenate(roots)))


def grid_bisect_roots(constants, points_per_interval=64, tol=DEFAULT_TOLERANCES):
    """Roots of the scalar secular equation by grid scan plus bisection.

    Poles are filtered and merged as in the production path.  Each interval
    is sampled at ``points_per_interval`` interior points; the first sign
    change of ``sum r/(eta - x) - (eta - P0_n)`` (with the bounding poles
    taken as ``+inf`` on the left, ``-inf`` on the right) is bisected down to
    adjacent floating-point numbers.
    """
    if points_per_interval < 64:
        raise ValueError("points_per_interval must be at least 64")
    active, _, _ = active_poles(constants, tol)
    x, r, p0 = active.positions, active.residues, active.p0n

    def f(eta):
        return float(np.sum(r / (eta - x)) - (eta - p0))

    pad = 1.0 + float(np.sum(r))
    lo_edge = min(x.min(initial=p0), p0) - pad
    hi_edge = max(x.max(initial=p0), p0) + pad
    edges = np.concatenate([[lo_edge], x, [hi_edge]])
    roots, brackets, members = [], [], []
    for k in range(len(edges) - 1):
        a, c = edges[k], edges[k + 1]
        grid = np.linspace(a, c, points_per_interval + 2)[1:-1]
        vals = [np.inf if k > 0 else f(a)] + [f(t) for t in grid] + [-np.inf if k < len(x) else f(c)]
        pts = [a] + list(grid) + [c]
        j = next((i for i in range(len(vals) - 1) if vals[i] > 0 >= vals[i + 1]), None)
        if j is None:
            continue
        x0, x1 = pts[j], pts[j + 1]
        while True:
            mid = 0.5 * (x0 + x1)
            if mid <= x0 or mid >= x1:
                break
            if f(mid) > 0:
                x0 = mid
            else:
                x1 = mid
        inside = [t for t in (x0, x1) if not ((k > 0 and t == a) or (k < len(x) and t == c))]
        root = min(inside, key=lambda t: abs(f(t))) if inside else 0.5 * (a + c)
        roots.append(root)
        brackets.append((a if k > 0 else -np.inf, c if k < len(x) else np.inf))
        members.append((active.members[k - 1] if k > 0 else None,
                        active.members[k] if k < len(x) else None))
    roots = np.array(roots)
    residuals = np.array([abs(f(e)) for e in roots])
    return SecularRoots(constants.n, p0, roots, brackets, members, residuals, active,
                        {"method": "grid", "points_per_interval": points_per_interval})


def compare_spectra(a, b, tol=DEFAULT_TOLERANCES.oracle_tol, strict=False):
    """Pair every value of ``a`` with the nearest unused value of ``b``.

    Gaps are relative, ``|x - y| / max(|x|, |y|, 1)``.  With ``strict`` the two
    reports must have the same number of values.
    """
    va, vb = np.sort(np.asarray(a.values, float)), np.sort(np.asarray(b.values, float))
    if strict and len(va) != len(vb):
        raise CountMismatch(f"{a.method} has {len(va)} values, {b.method} has {len(vb)}")
    used = np.zeros(len(vb), bool)
    matched = []
    for x in va:
        free = np.flatnonzero(~used)
        if free.size == 0:
            break
        k = free[np.argmin(np.abs(vb[free] - x))]
        used[k] = True
        d = abs(x - vb[k])
        matched.append((float(x), float(vb[k]), float(d), float(d / max(abs(x), abs(vb[k]), 1.0))))
    max_gap = max((m[3] for m in matched), default=0.0)
    passed = bool(len(matched) == len(va) and max_gap <= tol)
    return SpectrumReport(a.method, va, matched, max_gap, passed,
                          {"against": b.method, "unmatched": int(len(va) - len(matched))})


def secular_value_extended(constants, eta, dps=50):
    """``sum r/(eta - x) - (eta - P0_n)`` evaluated in ``dps``-digit arithmetic."""
    with mpmath.workdps(dps):
        e = mpmath.mpf(float(eta))
        total = mpmath.mpf(0)
        for x, r in zip(constants.positions, constants.residues):
            if r > 0:
                total += mpmath.mpf(float(r)) / (e - mpmath.mpf(float(x)))
        return total - (e - mpmath.mpf(float(constants.p0n)))


def sign_change_extended(constants, a, b, dps=50):
    """True if the secular mismatch changes sign between ``a`` and ``b`` (extended precision)."""
    fa = secular_value_extended(constants, a, dps)
    fb = secular_value_extended(constants, b, dps)
    return bool(fa * fb <= 0)


def oracle_report(problem, tol=DEFAULT_TOLERANCES, kernel_hook=None, mode="diagonal"):
    """Full vs partitioned (asserted) and secular vs full (reported) comparisons."""
    full = full_spectrum(problem)
    part = partitioned_spectrum(problem, tol, kernel_hook)
    exact = compare_spectra(part, full, tol.oracle_tol)
    # every exact level against its nearest scalar secular root: the mean-field gap
    secular = compare_spectra(full, secular_spectrum(problem, mode, tol), np.inf)
    return {"full": full, "partitioned": exact, "secular": secular, "passed": bool(exact.passed)}
