"""Finite object-instrument measurement problems.

A problem couples a measured object, described by channel energies ``phi``
(channel 0 is the non-measured background channel) and amplitudes ``a_g``,
to an instrument with reading values ``p0_n``.  The coupling is given as a
set of ``N_P x N_P`` blocks ``V[g, g']`` over the instrument basis.  The full
operator lives on the product basis ``(g, n)`` with flat index
``g * N_P + n`` (``n`` is zero-based throughout the package).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, NonFinite, NonHermitian, ZeroState

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-12


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Spectrum of the measured quantity and the measured state's amplitudes.

    ``amplitudes[k]`` is the amplitude of channel ``g = k + 1``; the
    background channel carries ``amp0`` (zero unless supplied).
    """

    phi: np.ndarray
    amplitudes: np.ndarray
    amp0: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "phi", _frozen(self.phi, float))
        object.__setattr__(self, "amplitudes", _frozen(self.amplitudes, complex))
        object.__setattr__(self, "amp0", complex(self.amp0))

    @property
    def n_phi(self):
        return len(self.phi) - 1


@dataclass(frozen=True, eq=False)
class InstrumentSpec:
    """Reading values of the instrument and its pre-measurement ground state."""

    readings: np.ndarray
    ground_weights: np.ndarray = None

    def __post_init__(self):
        readings = _frozen(self.readings, float)
        object.__setattr__(self, "readings", readings)
        weights = self.ground_weights
        if weights is None:
            n = max(len(readings), 1)
            weights = np.full(len(readings), 1.0 / np.sqrt(n))
        object.__setattr__(self, "ground_weights", _frozen(weights, complex))

    @property
    def n_p(self):
        return len(self.readings)


@dataclass(frozen=True, eq=False)
class CouplingSpec:
    """Coupling blocks keyed by ``(g, g')``; missing blocks are zero."""

    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        blocks = {}
        for key, value in dict(self.blocks).items():
            g, gp = key
            blocks[(int(g), int(gp))] = _frozen(value, complex)
        object.__setattr__(self, "blocks", blocks)

    def block(self, g, gp, n_p):
        b = self.blocks.get((g, gp))
        if b is None:
            return np.zeros((n_p, n_p), dtype=complex)
        return b


@dataclass(frozen=True, eq=False)
class MeasurementProblem:
    system: SystemSpec
    instrument: InstrumentSpec
    coupling: CouplingSpec = field(default_factory=CouplingSpec)
    label: str = ""

    @property
    def n_phi(self):
        return self.system.n_phi

    @property
    def n_p(self):
        return self.instrument.n_p

    @property
    def size(self):
        return (self.n_phi + 1) * self.n_p

    def block(self, g, gp):
        return self.coupling.block(g, gp, self.n_p)

    def __eq__(self, other):
        """Bitwise equality of every numeric field (and the label)."""
        if not isinstance(other, MeasurementProblem):
            return NotImplemented
        a, b = self, other
        if a.label != b.label or a.system.amp0 != b.system.amp0:
            return False
        pairs = [
            (a.system.phi, b.system.phi),
            (a.system.amplitudes, b.system.amplitudes),
            (a.instrument.readings, b.instrument.readings),
            (a.instrument.ground_weights, b.instrument.ground_weights),
        ]
        if any(x.shape != y.shape or not np.array_equal(x, y) for x, y in pairs):
            return False
        # missing blocks compare as zero blocks
        keys = set(a.coupling.blocks) | set(b.coupling.blocks)
        for g, gp in keys:
            x = a.block(g, gp)
            y = b.block(g, gp)
            if x.shape != y.shape or not np.array_equal(x, y):
                return False
        return True

    __hash__ = None


@dataclass(frozen=True)
class ProductBasisIndex:
    g: int
    n: int
    flat: int

    @classmethod
    def from_pair(cls, g, n, n_p):
        if not (0 <= n < n_p) or g < 0:
            raise IndexError(f"({g}, {n}) outside product basis with N_P={n_p}")
        return cls(g, n, g * n_p + n)

    @classmethod
    def from_flat(cls, flat, n_p):
        if flat < 0:
            raise IndexError(f"negative flat index {flat}")
        g, n = divmod(int(flat), n_p)
        return cls(g, n, int(flat))


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} contains NaN or Inf")


def validate_problem(raw):
    """Check a problem and return its canonical form.

    The canonical form has every coupling block materialized, exactly
    Hermitian block pairs, ``phi[0] == 0`` and unit-norm ground weights.
    Pinning ``phi[0]`` moves the old value into the readings, so the full
    operator is left unchanged.  The function is idempotent.

    Raises
    ------
    DimensionMismatch, NonHermitian, NonFinite, ZeroState
    """
    system, instrument = raw.system, raw.instrument
    phi = np.array(system.phi, dtype=float)
    amps = np.array(system.amplitudes, dtype=complex)
    readings = np.array(instrument.readings, dtype=float)
    weights = np.array(instrument.ground_weights, dtype=complex)

    if phi.ndim != 1 or len(phi) < 2:
        raise DimensionMismatch("phi needs the background channel and at least one measured channel")
    if readings.ndim != 1 or len(readings) < 1:
        raise DimensionMismatch("instrument needs at least one reading")
    n_phi, n_p = len(phi) - 1, len(readings)
    if amps.shape != (n_phi,):
        raise DimensionMismatch(f"expected {n_phi} amplitudes, got shape {amps.shape}")
    if weights.shape != (n_p,):
        raise DimensionMismatch(f"expected {n_p} ground weights, got shape {weights.shape}")
    for name, arr in (("phi", phi), ("amplitudes", amps), ("readings", readings),
                      ("ground_weights", weights), ("amp0", np.array([system.amp0]))):
        _check_finite(name, arr)

    if np.sum(np.abs(amps) ** 2) + abs(system.amp0) ** 2 == 0:
        raise ZeroState("all amplitudes of the measured state are zero")
    wnorm = np.sqrt(np.sum(np.abs(weights) ** 2))
    if wnorm == 0:
        raise ZeroState("instrument ground state has zero norm")
    if abs(wnorm - 1.0) > NORM_TOL:
        weights = weights / wnorm

    given = {}
    for (g, gp), b in raw.coupling.blocks.items():
        if not (0 <= g <= n_phi and 0 <= gp <= n_phi):
            raise DimensionMismatch(f"coupling block ({g}, {gp}) outside channels 0..{n_phi}")
        b = np.array(b, dtype=complex)
        if b.shape != (n_p, n_p):
            raise DimensionMismatch(f"coupling block ({g}, {gp}) has shape {b.shape}, expected {(n_p, n_p)}")
        _check_finite(f"coupling block ({g}, {gp})", b)
        given[(g, gp)] = b

    blocks = {}
    for g in range(n_phi + 1):
        for gp in range(g, n_phi + 1):
            upper = given.get((g, gp))
            lower = given.get((gp, g))
            if upper is None and lower is None:
                upper = np.zeros((n_p, n_p), dtype=complex)
            elif upper is None:
                upper = lower.conj().T
            elif lower is not None and np.max(np.abs(lower - upper.conj().T)) > HERMITIAN_TOL:
                raise NonHermitian(f"block ({gp}, {g}) is not the adjoint of block ({g}, {gp})")
            if g == gp:
                if np.max(np.abs(upper - upper.conj().T), initial=0.0) > HERMITIAN_TOL:
                    raise NonHermitian(f"diagonal block ({g}, {g}) is not Hermitian")
                upper = 0.5 * (upper + upper.conj().T)
                blocks[(g, g)] = upper
            else:
                blocks[(g, gp)] = upper
                blocks[(gp, g)] = upper.conj().T.copy()

    if phi[0] != 0.0:
        readings = readings + phi[0]
        phi = phi - phi[0]

    return MeasurementProblem(
        system=SystemSpec(phi, amps, system.amp0),
        instrument=InstrumentSpec(readings, weights),
        coupling=CouplingSpec(blocks),
        label=raw.label,
    )


def build_full_hamiltonian(problem):
    """Dense operator on the product basis.

    Block ``(g, g')`` is ``delta_gg' (diag(p0) + phi_g I) + V[g, g']``.
    """
    n_p = problem.n_p
    size = problem.size
    h = np.zeros((size, size), dtype=complex)
    diag_p = np.diag(problem.instrument.readings).astype(complex)
    for g in range(problem.n_phi + 1):
        rows = slice(g * n_p, (g + 1) * n_p)
        for gp in range(problem.n_phi + 1):
            cols = slice(gp * n_p, (gp + 1) * n_p)
            h[rows, cols] = problem.block(g, gp)
        h[rows, rows] += diag_p + problem.system.phi[g] * np.eye(n_p)
    return h


def initial_state(problem):
    """Product state ``a_g * w_n`` of the measured state and the instrument ground state."""
    amps = np.concatenate([[problem.system.amp0], problem.system.amplitudes])
    psi = np.kron(amps, problem.instrument.ground_weights)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ZeroState("initial state vanishes")
    return psi / norm


def swap_roles(problem):
    """Exchange object and instrument (real vs nondemolition expansion).

    The instrument states become the channels and the object channels become
    the instrument basis; block ``(n, n')`` of the result holds the entries
    ``V[g, g'][n, n']`` as a matrix over ``(g, g')``.  The result is a raw
    problem: its ``phi[0]`` is generally nonzero and its ground weights are
    not normalized until ``validate_problem`` is applied.  Swapping twice
    returns the original problem bit for bit.
    """
    n_phi, n_p = problem.n_phi, problem.n_p
    if n_p < 2:
        raise DimensionMismatch("role swap needs at least two instrument states")
    tensor = np.zeros((n_phi + 1, n_p, n_phi + 1, n_p), dtype=complex)
    present = set()
    for (g, gp), b in problem.coupling.blocks.items():
        tensor[g, :, gp, :] = b
        present.add((g, gp))
    blocks = {}
    for n in range(n_p):
        for npr in range(n_p):
            blocks[(n, npr)] = tensor[:, n, :, npr]
    weights = np.asarray(problem.instrument.ground_weights)
    swapped = MeasurementProblem(
        system=SystemSpec(problem.instrument.readings, weights[1:], weights[0]),
        instrument=InstrumentSpec(
            problem.system.phi,
            np.concatenate([[problem.system.amp0], problem.system.amplitudes]),
        ),
        coupling=CouplingSpec(blocks),
        label=problem.label,
    )
    return swapped


def shifted(problem, c):
    """Copy of ``problem`` with every energy (all phi and readings) moved by ``c``.

    ``phi[0]`` stays pinned at zero, so the whole shift goes to the readings;
    the full operator moves by ``c * I``.
    """
    return replace(
        problem,
        instrument=InstrumentSpec(problem.instrument.readings + c, problem.instrument.ground_weights),
    )
