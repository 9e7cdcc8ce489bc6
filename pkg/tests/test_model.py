import numpy as np
import pytest

from reduction_lab.errors import DimensionMismatch, NonFinite, NonHermitian, ZeroState
from reduction_lab.model import (CouplingSpec, InstrumentSpec, MeasurementProblem,
                                 ProductBasisIndex, SystemSpec, build_full_hamiltonian,
                                 initial_state, shifted, swap_roles, validate_problem)
from reduction_lab.scenarios import random_problem


def make(phi, amps, readings, blocks=None, weights=None):
    return MeasurementProblem(SystemSpec(phi, amps), InstrumentSpec(readings, weights),
                              CouplingSpec(blocks or {}))


def test_zero_coupling_operator_is_diagonal():
    p = validate_problem(make([0, 1], [1], [-1, 1]))
    h = build_full_hamiltonian(p)
    assert np.array_equal(h, np.diag([-1, 1, 0, 2]).astype(complex))


def test_missing_blocks_are_materialized():
    p = validate_problem(make([0, 1, 2], [1, 1], [0.0]))
    assert len(p.coupling.blocks) == 9
    assert all(not np.any(b) for b in p.coupling.blocks.values())


def test_background_energy_is_pinned_without_changing_operator():
    raw = make([0.5, 1.5, 2.5], [1, 1], [-1.0, 1.0], {(0, 1): 0.3 * np.ones((2, 2))})
    p = validate_problem(raw)
    assert np.array_equal(p.system.phi, [0.0, 1.0, 2.0])
    assert np.array_equal(p.instrument.readings, [-0.5, 1.5])
    h_raw = build_full_hamiltonian(p)
    # same eigenvalues as the unpinned operator assembled by hand
    unpinned = build_full_hamiltonian(MeasurementProblem(raw.system, raw.instrument, p.coupling))
    assert np.allclose(np.linalg.eigvalsh(h_raw), np.linalg.eigvalsh(unpinned), atol=1e-14)


def test_non_hermitian_pair_is_rejected():
    m = np.array([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(NonHermitian):
        validate_problem(make([0, 1], [1], [0, 1], {(0, 1): m, (1, 0): m}))


def test_non_hermitian_diagonal_block_is_rejected():
    with pytest.raises(NonHermitian):
        validate_problem(make([0, 1], [1], [0, 1], {(1, 1): np.array([[0, 1j], [1j, 0]])}))


@pytest.mark.parametrize("raw", [
    make([0, 1], [1, 1], [0.0]),
    make([0, 1], [1], [0.0], {(0, 1): np.ones((2, 2))}),
    make([0, 1], [1], [0.0, 1.0], weights=[1.0]),
    make([0], [], [0.0]),
])
def test_dimension_mismatch(raw):
    with pytest.raises(DimensionMismatch):
        validate_problem(raw)


def test_non_finite_and_zero_state():
    with pytest.raises(NonFinite):
        validate_problem(make([0, np.nan], [1], [0.0]))
    with pytest.raises(ZeroState):
        validate_problem(make([0, 1], [0], [0.0]))
    with pytest.raises(ZeroState):
        validate_problem(make([0, 1], [1], [0.0], weights=[0.0]))


def test_validate_is_idempotent(rng):
    p = random_problem(rng, 3, 4)
    assert validate_problem(p) == p


def test_full_operator_is_exactly_hermitian(rng):
    for _ in range(20):
        h = build_full_hamiltonian(random_problem(rng, 3, 4))
        assert np.max(np.abs(h - h.conj().T)) <= 1e-14


def test_global_shift_moves_every_eigenvalue(rng):
    p = random_problem(rng, 2, 3)
    w = np.linalg.eigvalsh(build_full_hamiltonian(p))
    ws = np.linalg.eigvalsh(build_full_hamiltonian(shifted(p, 3.25)))
    assert np.allclose(ws - w, 3.25, atol=1e-10)


def test_flat_index_round_trip():
    n_p = 4
    for flat in range(3 * n_p):
        idx = ProductBasisIndex.from_flat(flat, n_p)
        assert ProductBasisIndex.from_pair(idx.g, idx.n, n_p).flat == flat


def test_initial_state_examples():
    p = validate_problem(make([0, 1], [1], [0, 1]))
    assert np.allclose(initial_state(p), [0, 0, 1 / np.sqrt(2), 1 / np.sqrt(2)])
    p = validate_problem(make([0, 1, 2], [1, 1], [0.0]))
    assert np.allclose(initial_state(p), [0, 1 / np.sqrt(2), 1 / np.sqrt(2)])


def test_swap_roles_is_an_involution(rng):
    for _ in range(10):
        p = random_problem(rng, int(rng.integers(1, 4)), int(rng.integers(2, 5)))
        assert swap_roles(swap_roles(p)) == p


def test_swap_of_uncoupled_problem_is_uncoupled():
    p = validate_problem(make([0, 1], [1], [0, 1]))
    assert all(not np.any(b) for b in swap_roles(p).coupling.blocks.values())


def test_swap_keeps_the_full_spectrum(rng):
    p = random_problem(rng, 2, 3)
    q = validate_problem(swap_roles(p))
    w = np.linalg.eigvalsh(build_full_hamiltonian(p))
    wq = np.linalg.eigvalsh(build_full_hamiltonian(q))
    assert np.allclose(w, wq, atol=1e-10)
