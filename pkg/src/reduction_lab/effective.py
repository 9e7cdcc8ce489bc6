"""Exact elimination of the measured channels ``g >= 1``.

Each measured channel gets an auxiliary spectrum (levels and modes of the
instrument dressed by that channel).  From these we build the Green
functions, the energy-dependent effective kernel acting on channel 0, and
the h-kernels that rebuild the eliminated components from a channel-0
solution.

Two auxiliary modes are offered.  ``"diagonal"`` solves each channel on its
own and drops the inter-channel blocks ``V[g, g']`` (``g != g'``, both
``>= 1``); this is the mean-field treatment.  ``"full"`` diagonalizes the
joint block of all measured channels, so the reduction is exact.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EigenFailure, PoleProximity
from .config import DEFAULT_TOLERANCES

MODES = ("diagonal", "full")


@dataclass(frozen=True, eq=False)
class AuxiliarySpectrum:
    """Auxiliary levels attached to channel ``g``.

    ``levels`` are reported without the ``phi_g`` shift, so pole positions are
    ``levels + phi_g``.  ``modes`` holds the channel-``g`` slice of each level's
    eigenvector (columns); in diagonal mode it is a unitary ``N_P x N_P``
    matrix.  ``vectors`` holds the whole eigenvector over the stacked measured
    channels ``1..N_phi`` and is what the exact kernels use.
    """

    g: int
    phi_g: float
    levels: np.ndarray
    modes: np.ndarray
    vectors: np.ndarray
    mode: str = "diagonal"

    @property
    def poles(self):
        return self.levels + self.phi_g


@dataclass(frozen=True, eq=False)
class EffectiveKernel:
    eta: float
    matrix: np.ndarray


def fix_phase(vectors):
    """Rotate each column so its first non-negligible entry is real and positive."""
    out = np.array(vectors, dtype=complex)
    for k in range(out.shape[1]):
        col = out[:, k]
        scale = np.max(np.abs(col), initial=0.0)
        if scale == 0:
            continue
        idx = np.flatnonzero(np.abs(col) > 1e-12 * scale)[0]
        out[:, k] = col * (abs(col[idx]) / col[idx])
    return out


def _eigh(matrix):
    try:
        w, v = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise EigenFailure("eigenvalues are not finite")
    return w, fix_phase(v)


def solve_auxiliary(problem, mode="diagonal"):
    """Auxiliary spectra for channels ``1..N_phi``.

    In diagonal mode channel ``g`` solves ``diag(p0) + V[g, g]``.  In full
    mode the joint block (with all ``V[g, g']``, ``g, g' >= 1``) is
    diagonalized and each eigenvector is assigned to the channel holding most
    of its weight.
    """
    if mode not in MODES:
        raise ValueError(f"unknown auxiliary mode {mode!r}")
    n_phi, n_p = problem.n_phi, problem.n_p
    readings = problem.instrument.readings
    phi = problem.system.phi
    out = []
    if mode == "diagonal":
        for g in range(1, n_phi + 1):
            levels, modes = _eigh(np.diag(readings) + problem.block(g, g))
            vectors = np.zeros((n_phi * n_p, n_p), dtype=complex)
            vectors[(g - 1) * n_p:g * n_p, :] = modes
            out.append(AuxiliarySpectrum(g, float(phi[g]), levels, modes, vectors, mode))
        return out

    size = n_phi * n_p
    joint = np.zeros((size, size), dtype=complex)
    for g in range(1, n_phi + 1):
        rows = slice((g - 1) * n_p, g * n_p)
        for gp in range(1, n_phi + 1):
            joint[rows, (gp - 1) * n_p:gp * n_p] = problem.block(g, gp)
        joint[rows, rows] += np.diag(readings + phi[g])
    energies, vecs = _eigh(joint)
    weights = np.abs(vecs.reshape(n_phi, n_p, size)) ** 2
    owner = np.argmax(weights.sum(axis=1), axis=0) + 1
    for g in range(1, n_phi + 1):
        sel = np.flatnonzero(owner == g)
        rows = slice((g - 1) * n_p, g * n_p)
        out.append(AuxiliarySpectrum(
            g, float(phi[g]), energies[sel] - phi[g], vecs[rows, sel], vecs[:, sel], mode))
    return out


def coupling_row(problem):
    """``[V[0, 1], ..., V[0, N_phi]]`` as one ``N_P x (N_phi N_P)`` matrix."""
    return np.hstack([problem.block(0, g) for g in range(1, problem.n_phi + 1)])


def pole_table(problem, aux):
    """Flatten the auxiliary spectra into pole positions and coupling vectors.

    Returns ``(positions, couplings, channels, indices, vectors)`` where
    column ``k`` of ``couplings`` is ``W u_k`` (the channel-0 image of the
    ``k``-th auxiliary eigenvector).
    """
    w = coupling_row(problem)
    positions, channels, indices, vecs = [], [], [], []
    for a in aux:
        positions.append(a.poles)
        channels.append(np.full(len(a.levels), a.g))
        indices.append(np.arange(len(a.levels)))
        vecs.append(a.vectors)
    positions = np.concatenate(positions)
    vectors = np.hstack(vecs)
    return positions, w @ vectors, np.concatenate(channels), np.concatenate(indices), vectors


def check_pole_distance(positions, eta, tol_pole):
    """Raise ``PoleProximity`` if ``eta`` is within ``tol_pole`` (relative) of a pole."""
    positions = np.sort(np.asarray(positions, dtype=float))
    if len(positions) == 0:
        return
    dist = np.abs(positions - eta)
    k = int(np.argmin(dist))
    gaps = np.diff(positions)
    neighbours = []
    if k > 0:
        neighbours.append(gaps[k - 1])
    if k < len(gaps):
        neighbours.append(gaps[k])
    neighbours = [s for s in neighbours if s > 0]
    scale = min(neighbours) if neighbours else max(1.0, abs(positions[k]))
    if dist[k] < tol_pole * scale:
        raise PoleProximity(f"eta={eta!r} lies within {dist[k]:.3e} of pole {positions[k]!r}")


def green_function(aux, eta, tol_pole=DEFAULT_TOLERANCES.tol_pole):
    """``sum_n m_n m_n^dagger / (level_n - (eta - phi_g))`` over the channel's modes."""
    check_pole_distance(aux.poles, eta, tol_pole)
    denom = aux.levels - (eta - aux.phi_g)
    g = (aux.modes / denom) @ aux.modes.conj().T
    return 0.5 * (g + g.conj().T)


def effective_kernel(problem, aux, eta, tol_pole=DEFAULT_TOLERANCES.tol_pole):
    """``V[0,0] + sum_k (W u_k)(W u_k)^dagger / (eta - E_k)``.

    With full-mode auxiliary spectra this is exactly the Schur complement of
    the full operator onto channel 0 (minus ``diag(p0)``).
    """
    positions, b, _, _, _ = pole_table(problem, aux)
    active = np.any(np.abs(b) > 0, axis=0)
    check_pole_distance(positions[active], eta, tol_pole)
    m = problem.block(0, 0) + (b[:, active] / (eta - positions[active])) @ b[:, active].conj().T
    return EffectiveKernel(float(eta), 0.5 * (m + m.conj().T))


def h_kernel(problem, aux, g, eta, tol_pole=DEFAULT_TOLERANCES.tol_pole):
    """Operator mapping a channel-0 component to the channel-``g`` component.

    ``psi_g = h_kernel(...) @ psi_0`` solves the channel-``g`` rows of the full
    eigenproblem at energy ``eta``.
    """
    n_p = problem.n_p
    positions, b, _, _, vectors = pole_table(problem, aux)
    slice_g = vectors[(g - 1) * n_p:g * n_p, :]
    used = np.any(np.abs(slice_g) > 0, axis=0) & np.any(np.abs(b) > 0, axis=0)
    check_pole_distance(positions[used], eta, tol_pole)
    return (slice_g[:, used] / (eta - positions[used])) @ b[:, used].conj().T


def effective_channel_matrix(problem, aux, eta, tol_pole=DEFAULT_TOLERANCES.tol_pole):
    """``diag(p0) + V_eff(eta)``: the nonlinear channel-0 eigenproblem at ``eta``."""
    kernel = effective_kernel(problem, aux, eta, tol_pole)
    return np.diag(problem.instrument.readings).astype(complex) + kernel.matrix


def assemble_state(problem, aux, psi0, eta, tol_pole=DEFAULT_TOLERANCES.tol_pole):
    """Full product-basis vector from a channel-0 component (not normalized)."""
    parts = [np.asarray(psi0, dtype=complex)]
    for g in range(1, problem.n_phi + 1):
        parts.append(h_kernel(problem, aux, g, eta, tol_pole) @ psi0)
    return np.concatenate(parts)
