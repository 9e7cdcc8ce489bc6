# coding: utf-8

# # Checking the reduction against brute force
#
# The channel reduction is exact when the eliminated channels are solved in
# full.  Here we compare three routes to the same spectrum on random
# problems: dense diagonalisation of the coupled operator, the nonlinear
# eigenproblem in channel 0, and the scalar secular roots.

import numpy as np

from reduction_lab import build_two_slit, FIX_TS
from reduction_lab.oracle import (compare_spectra, full_spectrum, inertia_eigenvalues,
                                  oracle_report, partitioned_spectrum)
from reduction_lab.model import build_full_hamiltonian
from reduction_lab.scenarios import random_problem

rng = np.random.default_rng(2024)

# ## Dense versus inertia bisection
#
# Two unrelated eigenvalue routines on one coupled operator.

h = build_full_hamiltonian(build_two_slit(FIX_TS))
dense = np.linalg.eigvalsh(h)
bisected = inertia_eigenvalues(h)
print("max difference:", np.max(np.abs(dense - bisected)))

# ## Exact partitioning on random problems

worst = 0.0
for _ in range(50):
    p = random_problem(rng, int(rng.integers(1, 5)), int(rng.integers(1, 6)))
    rep = compare_spectra(partitioned_spectrum(p), full_spectrum(p))
    assert rep.passed
    worst = max(worst, rep.max_gap)
print("50 random problems, worst relative gap:", worst)

# ## The mean-field approximation
#
# The scalar secular roots keep only the diagonal of the kernel, so they
# deviate from the exact levels by an amount that grows with the coupling.

report = oracle_report(build_two_slit(FIX_TS))
print("exact partitioning passed:", report["passed"])
print("secular vs full, worst relative gap:", round(report["secular"].max_gap, 6))
for exact, scalar, _, _ in report["secular"].matched:
    print(f"  exact {exact: .6f}   secular {scalar: .6f}")
