# coding: utf-8

# # Two slits, two detectors
#
# A two-level object (the "which slit" degree of freedom, levels -1 and +1)
# is coupled to an instrument with two readings.  Each slit talks mostly to
# its own detector reading; a small leakage lets it talk to the other one.
# This walkthrough solves the symmetric and the asymmetric set-ups end to end.

import numpy as np

from reduction_lab import FIX_TA, FIX_TS, build_two_slit, count_solutions, two_slit_report

np.set_printoptions(precision=6, suppress=True)

# ## Building the problem
#
# `FIX_TS` is the symmetric configuration: equal amplitudes 1/sqrt(2) on the
# two slits.  `build_two_slit` turns the configuration into a validated
# measurement problem.

problem = build_two_slit(FIX_TS)
print("channels:", problem.n_phi, " readings:", problem.n_p, " full size:", problem.size)

# ## How many solutions should we expect?
#
# Every baseline state carries N_Phi * N_P + 1 roots; a single realisation
# needs N_P + 1 of them, so the roots split into about N_Phi realisations.

print(count_solutions(problem.n_phi, problem.n_p))

# ## Running the reduction

report = two_slit_report(problem)
for n, roots in enumerate(report.roots):
    print(f"baseline state {n}: roots", np.asarray(roots))

# The root lying right next to the unperturbed line is shared: it sits
# between a pole of channel 1 and a pole of channel 2, so it belongs to both
# realisations.

for n, labels in enumerate(report.classification.labels):
    print(f"state {n} shared roots:", [round(lab.eta, 6) for lab in labels if lab.shared])

# ## Realisations and their probabilities

for r, loc in zip(report.realisations, report.localization):
    print(f"realisation {r.i}: channel {r.g}, alpha = {r.alpha:.12f}, "
          f"channel fractions = {np.round(loc.channel_fractions, 5)}, "
          f"own channel dominates = {loc.own_channel_dominates}")

# Each realisation is localised in one detector channel: the interference
# between the two slits is gone once the record is made.

print("interference erasure:", round(report.diagnostics["interference_erasure"], 4))

# ## The asymmetric case
#
# With amplitudes 0.6 and 0.8 the probabilities become 0.36 and 0.64.

asym = two_slit_report(build_two_slit(FIX_TA))
print("asymmetric alphas:", [round(a, 12) for a in asym.alphas])
