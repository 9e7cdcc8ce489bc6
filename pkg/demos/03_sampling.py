# coding: utf-8

# # Sampling outcomes
#
# Given the realisation probabilities we draw individual runs of the
# experiment.  A fixed seed gives the same sequence every time.

import numpy as np

from reduction_lab import FIX_TA, build_two_slit, sample, solve_problem
from reduction_lab.realisation import chi_square, sample_arrays

solution = solve_problem(build_two_slit(FIX_TA))
print("alphas:", [round(a, 12) for a in solution.alphas])

# ## A few draws

for record in sample(solution.realisations, solution.alphas, seed=7, count=5):
    print(record)

# ## Frequencies converge to the probabilities
#
# The standard deviation of the frequency for 1e5 draws is
# sqrt(0.64 * 0.36 / 1e5) = 0.0015.

freqs = []
for seed in range(20):
    real, _, _ = sample_arrays(solution.realisations, solution.alphas, seed, 100_000)
    freqs.append(np.mean(real == 2))
print("mean frequency of realisation 2:", round(float(np.mean(freqs)), 5),
      " spread:", round(float(np.std(freqs)), 5))

# ## Goodness of fit

records = sample(solution.realisations, solution.alphas, seed=11, count=20_000)
print("chi-square:", chi_square(records, solution.alphas))

# ## Reproducibility

a = sample_arrays(solution.realisations, solution.alphas, 42, 1000)
b = sample_arrays(solution.realisations, solution.alphas, 42, 1000)
print("same seed, same draws:", all(np.array_equal(x, y) for x, y in zip(a, b)))
