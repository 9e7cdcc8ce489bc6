import numpy as np
import pytest

from reduction_lab.effective import solve_auxiliary
from reduction_lab.errors import AllZero
from reduction_lab.model import (CouplingSpec, InstrumentSpec, MeasurementProblem, SystemSpec,
                                 build_full_hamiltonian, shifted, validate_problem)
from reduction_lab.pipeline import solve_problem
from reduction_lab.realisation import (Realisation, boundary_match, density, expected_density,
                                       interference_erasure, localization_report, probabilities,
                                       reduced_state, sample)
from reduction_lab.scenarios import random_problem, scalar_problem


def uncoupled():
    return validate_problem(MeasurementProblem(SystemSpec([0, 1], [1]), InstrumentSpec([0.0, 2.0])))


def test_uncoupled_state_is_a_channel_zero_basis_state():
    p = uncoupled()
    s = reduced_state(p, solve_auxiliary(p), 1, 2.0, n=1)
    assert np.allclose(np.abs(s.components), [[0, 1], [0, 0]])


def test_scalar_problem_eigenvector():
    p = scalar_problem()
    s = reduced_state(p, solve_auxiliary(p), 1, 1.0, n=0)
    assert np.allclose(s.components.ravel(), [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-12)
    assert s.residual < 1e-12


def test_exact_roots_give_exact_states_in_full_mode(rng):
    p = random_problem(rng, 2, 3)
    aux = solve_auxiliary(p, "full")
    w = np.linalg.eigvalsh(build_full_hamiltonian(p))
    for eta in w:
        s = reduced_state(p, aux, 1, eta)
        assert s.residual <= 1e-8
        assert abs(np.linalg.norm(s.components) - 1) < 1e-12


@pytest.mark.parametrize("amps,expected", [((0.5, 0.5), (0.5, 0.5)), ((0.6, 0.8), (0.36, 0.64)),
                                           ((1.0,), (1.0,))])
def test_probabilities(amps, expected):
    reals = [Realisation(i + 1, i + 1, (), (), C=a) for i, a in enumerate(amps)]
    assert np.allclose(probabilities(reals), expected, atol=1e-12)


def test_all_zero_amplitudes():
    with pytest.raises(AllZero):
        probabilities([Realisation(1, 1, (), (), C=0j)])


def test_boundary_match(fix_ts, fix_ta):
    sol = solve_problem(fix_ta)
    assert [r.C for r in sol.realisations] == [0.6, 0.8]
    for r in sol.realisations:
        C, c, degenerate = boundary_match(fix_ta, r)
        assert abs(c.sum() - 1) < 1e-15 and not degenerate
    r1, r2 = solve_problem(fix_ts).realisations
    assert r1.C == r2.C
    assert np.allclose(np.sort(r1.c), np.sort(r2.c), atol=1e-12)


def test_single_realisation_probability_is_one():
    sol = solve_problem(uncoupled())
    assert sol.alphas == [1.0]
    assert abs(sol.realisations[0].c.sum() - 1) < 1e-15


def test_expected_density(fix_ts):
    sol = solve_problem(fix_ts)
    exp = expected_density(sol.realisations, sol.alphas)
    manual = sum(a * density(r).values for r, a in zip(sol.realisations, sol.alphas))
    assert np.max(np.abs(exp.values - manual)) <= 1e-14
    assert abs(exp.total - 1) < 1e-12 and np.all(exp.values >= 0)
    # detector marginal follows the probabilities up to the leakage into channel 0
    assert np.max(np.abs(exp.channel_marginal[1:] - sol.alphas)) <= 0.05


def test_uncoupled_density_stays_in_channel_zero():
    sol = solve_problem(uncoupled())
    assert np.isclose(density(sol.realisations[0]).channel_marginal[0], 1.0)
    assert np.isclose(localization_report(sol.realisations[0]).channel_fractions[0], 1.0)


def test_fix_ts_localization(fix_ts):
    for r in solve_problem(fix_ts).realisations:
        rep = localization_report(r)
        assert rep.own_channel_dominates and rep.dominant_channel == r.g


def test_sampling_single_realisation():
    sol = solve_problem(uncoupled())
    recs = sample(sol.realisations, [1.0], 7, 5)
    assert len(recs) == 5 and all(r.realisation == 1 for r in recs)


def test_sampling_is_deterministic(fix_ts):
    sol = solve_problem(fix_ts)
    assert sample(sol.realisations, sol.alphas, 42, 200) == sample(sol.realisations, sol.alphas, 42, 200)
    assert sample(sol.realisations, sol.alphas, 42, 200) != sample(sol.realisations, sol.alphas, 43, 200)


def test_alpha_invariances(fix_ta):
    base = solve_problem(fix_ta).alphas
    rotated = validate_problem(MeasurementProblem(
        SystemSpec(fix_ta.system.phi, fix_ta.system.amplitudes * np.exp(0.7j)),
        fix_ta.instrument, fix_ta.coupling))
    assert np.allclose(solve_problem(rotated).alphas, base, atol=1e-12)
    assert np.allclose(solve_problem(shifted(fix_ta, 4.5)).alphas, base, atol=1e-12)


def test_zero_amplitude_realisation_is_dropped(fix_ts):
    p = validate_problem(MeasurementProblem(SystemSpec(fix_ts.system.phi, [0.0, 1.0]),
                                            fix_ts.instrument, fix_ts.coupling))
    sol = solve_problem(p)
    assert [r.g for r in sol.realisations] == [2] and sol.alphas == [1.0]


def test_interference_erasure_is_positive(fix_ts):
    assert interference_erasure(solve_problem(fix_ts).realisations) > 0
