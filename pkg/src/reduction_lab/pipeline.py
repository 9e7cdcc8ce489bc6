"""End-to-end run: auxiliary spectra -> secular roots -> realisations -> probabilities."""

from dataclasses import dataclass

from .config import DEFAULT_TOLERANCES
from .effective import solve_auxiliary
from .realisation import build_realisations, match_all
from .secular import channel_constants, classify_realisations, find_roots


@dataclass(frozen=True, eq=False)
class Solution:
    problem: object
    mode: str
    aux: list
    constants: list
    roots: list
    classification: object
    realisations: list

    @property
    def alphas(self):
        return [r.alpha for r in self.realisations]

    @property
    def counts(self):
        return self.classification.counts


def solve_problem(problem, mode="diagonal", tol=DEFAULT_TOLERANCES):
    """Run the whole reduction on a validated problem."""
    aux = solve_auxiliary(problem, mode)
    constants = [channel_constants(problem, aux, n) for n in range(problem.n_p)]
    roots = [find_roots(c, tol) for c in constants]
    classification = classify_realisations(roots, constants, problem.n_phi, problem.n_p)
    realisations = match_all(problem, build_realisations(problem, aux, classification, tol))
    return Solution(problem, mode, aux, constants, roots, classification, realisations)
