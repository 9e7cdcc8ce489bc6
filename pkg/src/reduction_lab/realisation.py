"""Realisations: reduced states, boundary matching, probabilities, sampling."""

from dataclasses import dataclass, field, replace

import numpy as np

from .config import DEFAULT_TOLERANCES
from .effective import assemble_state, effective_channel_matrix, fix_phase
from .errors import AllZero, ChannelSolveFailure
from .model import build_full_hamiltonian


@dataclass(frozen=True, eq=False)
class ReducedState:
    """Normalized product-basis state attached to one secular root.

    ``components`` has shape ``(N_phi + 1, N_P)``.  ``residual`` is
    ``|(H - root) psi|`` on the full operator (zero for exact roots);
    ``mismatch`` is the gap between the root and the channel-0 component's
    Rayleigh quotient of the effective channel matrix.
    """

    n: int
    root: float
    g: int
    components: np.ndarray
    mismatch: float
    residual: float

    @property
    def channel_mass(self):
        return np.sum(np.abs(self.components) ** 2, axis=1)


@dataclass(frozen=True, eq=False)
class Realisation:
    """One incoherent branch of the solution set, tied to measured channel ``g``.

    ``c`` are the linear intra-realisation weights (they sum to one);
    ``weights`` are the squared-modulus weights that govern sampling.
    ``phases`` rotate each reduced state so that its overlap with the
    instrument ground state is real and positive before the states are
    superposed.
    """

    i: int
    g: int
    roots: tuple
    states: tuple
    C: complex = None
    c: np.ndarray = None
    alpha: float = None
    phases: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def weights(self):
        w = np.abs(self.c) ** 2
        return w / w.sum()


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Intensities over ``(g, n)`` cells with the two marginals."""

    values: np.ndarray

    @property
    def channel_marginal(self):
        return self.values.sum(axis=1)

    @property
    def instrument_marginal(self):
        return self.values.sum(axis=0)

    @property
    def total(self):
        return float(self.values.sum())


@dataclass(frozen=True)
class SampleRecord:
    draw: int
    realisation: int
    reading_index: int
    root_value: float


@dataclass(frozen=True, eq=False)
class LocalizationReport:
    channel_fractions: np.ndarray
    window_fractions: dict
    dominant_channel: int
    own_channel_dominates: bool


def _candidate(problem, aux, h, psi0, root, tol_pole):
    psi = assemble_state(problem, aux, psi0, root, tol_pole)
    psi = psi / np.linalg.norm(psi)
    psi = fix_phase(psi[:, None])[:, 0]
    return psi, float(np.linalg.norm(h @ psi - root * psi))


def reduced_state(problem, aux, g, root, n=None, tol=DEFAULT_TOLERANCES):
    """Build the reduced state of a root classified to channel ``g``.

    Two channel-0 components are tried; among those whose mismatch (below)
    is within tolerance, the one whose assembled state has the smaller
    full-operator residual wins: the eigenvector of
    ``diag(p0) + V_eff(root)`` whose eigenvalue lies nearest the root (exact
    when the root is an eigenvalue of the coupled problem), and the baseline
    instrument state ``n`` the root was found for (the projection used by the
    scalar secular equation, whose diagonal element equals the root).  The
    components of channels ``g >= 1`` follow from the h-kernels.  Secular
    roots lie strictly between poles, so the kernels are evaluated without
    the pole-proximity guard.

    ``mismatch`` is ``|x^dagger (diag(p0) + V_eff(root)) x - root|`` for the
    chosen channel-0 vector ``x``; ``residual`` is the full-operator residual,
    which for the redundant roots of the scalar equation is of the order of
    the coupling and measures the mean-field error.

    Raises
    ------
    ChannelSolveFailure
        If the mismatch exceeds ``tol_mean_field * (1 + |root|)``.
    """
    h = build_full_hamiltonian(problem)
    m = effective_channel_matrix(problem, aux, root, 0.0)
    w, v = np.linalg.eigh(m)
    k = int(np.argmin(np.abs(w - root)))
    vectors = [v[:, k]]
    if n is not None:
        base = np.zeros(problem.n_p, dtype=complex)
        base[n] = 1.0
        vectors.append(base)
    limit = tol.tol_mean_field * (1.0 + abs(root))
    best = None
    for x in vectors:
        mismatch = abs(np.vdot(x, m @ x).real - root)
        if not mismatch <= limit:
            continue
        psi, residual = _candidate(problem, aux, h, x, root, 0.0)
        if best is None or residual < best[1]:
            best = (psi, residual, mismatch)
    if best is None:
        raise ChannelSolveFailure(
            f"no solution of the effective channel problem near root {root!r}")
    psi, residual, mismatch = best
    return ReducedState(n if n is not None else -1, float(root), int(g),
                        psi.reshape(problem.n_phi + 1, problem.n_p), float(mismatch), residual)


def realisation_groups(problem, classification):
    """Root groups per measured channel, including roots that no pole bounds.

    A baseline state without active poles (no coupling reaches it) has a
    single root that belongs to no channel; it joins every group.  If no
    group exists at all (the problem is uncoupled) a single group is formed
    for the channel with the largest amplitude.
    """
    groups = {g: list(v) for g, v in classification.groups.items()}
    loose = [(lab.n, lab.eta) for chan in classification.labels for lab in chan if not lab.members]
    if not groups:
        g = int(np.argmax(np.abs(problem.system.amplitudes))) + 1
        groups = {g: []}
    for v in groups.values():
        v.extend(loose)
        v.sort(key=lambda t: (t[0], t[1]))
    return groups


def build_realisations(problem, aux, classification, tol=DEFAULT_TOLERANCES):
    """Reduced states for every group of the classification, in channel order."""
    out = []
    groups = realisation_groups(problem, classification)
    for i, (g, pairs) in enumerate(sorted(groups.items()), start=1):
        states = tuple(reduced_state(problem, aux, g, eta, n, tol) for n, eta in pairs)
        out.append(Realisation(i=i, g=int(g), roots=tuple(pairs), states=states))
    return out


def _overlaps(problem, realisation):
    ground = problem.instrument.ground_weights
    return np.array([np.vdot(ground, s.components[realisation.g]) for s in realisation.states])


def boundary_match(problem, realisation, overlap_floor=1e-14):
    """Amplitude ``C_i`` and linear weights ``c`` of a realisation.

    ``C_i`` is the measured-state amplitude of the realisation's channel.  The
    weight of each reduced state is the modulus of the overlap between its
    channel-``g(i)`` instrument profile and the instrument ground state,
    normalized to unit sum.  Returns ``(C, c, degenerate)``; when every overlap
    is below ``overlap_floor`` the weights fall back to uniform and
    ``degenerate`` is True.
    """
    C = complex(problem.system.amplitudes[realisation.g - 1])
    raw = np.abs(_overlaps(problem, realisation))
    if raw.size == 0 or np.all(raw < overlap_floor):
        c = np.full(len(realisation.states), 1.0 / max(len(realisation.states), 1))
        return C, c, True
    return C, raw / raw.sum(), False


def probabilities(realisations):
    """``alpha_i = |C_i|^2 / sum_j |C_j|^2``."""
    c = np.array([abs(r.C) ** 2 for r in realisations], dtype=float)
    total = c.sum()
    if total == 0:
        raise AllZero("every realisation amplitude is zero")
    return c / total


def match_all(problem, realisations):
    """Boundary-match every realisation, attach probabilities, drop empty ones.

    Realisations whose amplitude vanishes carry zero probability and are
    removed; the remaining probabilities are renormalized.
    """
    matched = []
    for r in realisations:
        C, c, degenerate = boundary_match(problem, r)
        ov = _overlaps(problem, r)
        phases = np.where(np.abs(ov) > 0, np.conj(ov) / np.where(ov == 0, 1, np.abs(ov)), 1.0)
        diag = dict(r.diagnostics, degenerate_overlap=degenerate)
        matched.append(replace(r, C=C, c=c, phases=phases, diagnostics=diag))
    alphas = probabilities(matched)
    kept = [replace(r, alpha=float(a)) for r, a in zip(matched, alphas) if a > 0]
    alphas = probabilities(kept)
    return [replace(r, alpha=float(a), i=i) for i, (r, a) in enumerate(zip(kept, alphas), start=1)]


def realisation_amplitude(realisation):
    """Coherent ``sum_s c_s psi_s`` over the realisation's reduced states (phase aligned)."""
    phases = realisation.phases
    if phases is None:
        phases = np.ones(len(realisation.states))
    amp = np.zeros_like(realisation.states[0].components)
    for w, ph, s in zip(realisation.c, phases, realisation.states):
        amp = amp + w * ph * s.components
    return amp


def density(realisation):
    """Intensity of the realisation's coherent state, normalized to unit total."""
    rho = np.abs(realisation_amplitude(realisation)) ** 2
    return DensityGrid(rho / rho.sum())


def expected_density(realisations, alphas):
    values = sum(a * density(r).values for r, a in zip(realisations, alphas))
    return DensityGrid(values)


def sample_arrays(realisations, alphas, seed, count):
    """Vectorized draws; returns ``(realisation, reading_index, root_value)`` arrays.

    The realisation is drawn with probability ``alpha_i``, then one of its
    reduced states with probability ``|c_s|^2 / sum |c|^2``.  A single PCG64
    stream seeded by ``seed`` supplies all uniforms, so the output is
    reproducible bit for bit.
    """
    alphas = np.asarray(alphas, dtype=float)
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    u = rng.random((2, count))
    cum = np.cumsum(alphas)
    picks = np.minimum(np.searchsorted(cum, u[0] * cum[-1], side="right"), len(alphas) - 1)
    real = np.empty(count, dtype=int)
    reading = np.empty(count, dtype=int)
    root = np.empty(count, dtype=float)
    for k, r in enumerate(realisations):
        sel = np.flatnonzero(picks == k)
        cw = np.cumsum(r.weights)
        s = np.minimum(np.searchsorted(cw, u[1, sel] * cw[-1], side="right"), len(cw) - 1)
        real[sel] = r.i
        reading[sel] = np.array([st.n for st in r.states])[s]
        root[sel] = np.array([st.root for st in r.states])[s]
    return real, reading, root


def sample(realisations, alphas, seed, count):
    """Draw ``count`` measurement outcomes as ``SampleRecord`` objects (see ``sample_arrays``)."""
    real, reading, root = sample_arrays(realisations, alphas, seed, count)
    return [SampleRecord(k, int(a), int(b), float(c))
            for k, (a, b, c) in enumerate(zip(real, reading, root))]


def localization_report(realisation, windows=None):
    """Mass fractions of a realisation's density per channel and per instrument window.

    ``windows`` maps a name to a set of instrument indices; by default every
    instrument index is its own window.  ``own_channel_dominates`` compares
    the realisation's channel with the other measured channels (``g >= 1``).
    """
    rho = density(realisation).values
    chan = rho.sum(axis=1)
    if windows is None:
        windows = {n: {n} for n in range(rho.shape[1])}
    win = {name: float(rho[:, sorted(idx)].sum()) for name, idx in windows.items()}
    measured = chan[1:]
    dominant = int(np.argmax(measured)) + 1
    others = np.delete(measured, realisation.g - 1)
    own = measured[realisation.g - 1]
    return LocalizationReport(chan, win, dominant, bool(others.size == 0 or own > others.max()))


def chi_square(records, alphas):
    """Pearson statistic of sampled realisation counts against ``alphas``."""
    alphas = np.asarray(alphas, dtype=float)
    counts = np.bincount([r.realisation - 1 for r in records], minlength=len(alphas))
    expected = alphas * len(records)
    mask = expected > 0
    return float(np.sum((counts[mask] - expected[mask]) ** 2 / expected[mask])) if len(records) else 0.0


def interference_erasure(realisations):
    """L2 size of the cross term that the incoherent mixture removes.

    Each realisation contributes its instrument profile ``psi_i`` (the
    channel-``g(i)`` part of its coherent state, normalized).  The value is
    ``|| |sum_i C_i psi_i|^2 - sum_i |C_i psi_i|^2 ||_2`` over the instrument
    states: the interference an unmeasured superposition would show and the
    realised mixture does not.
    """
    profiles = []
    for r in realisations:
        prof = realisation_amplitude(r)[r.g]
        norm = np.linalg.norm(prof)
        profiles.append(r.C * prof / norm if norm > 0 else prof)
    coherent = np.abs(sum(profiles)) ** 2
    incoherent = sum(np.abs(p) ** 2 for p in profiles)
    return float(np.linalg.norm(coherent - incoherent))
