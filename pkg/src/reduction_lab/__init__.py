"""Channel reduction of coupled object-instrument eigenproblems.

A finite measurement problem is reduced to a scalar secular equation per
instrument state; its redundant roots are grouped into incoherent
realisations whose probabilities and sampled outcomes are computed and
cross-checked against brute-force oracles.
"""

from .config import DEFAULT_TOLERANCES, Tolerances
from .effective import (AuxiliarySpectrum, EffectiveKernel, assemble_state, effective_kernel,
                        green_function, h_kernel, solve_auxiliary)
from .errors import *  # noqa: F401,F403
from .model import (CouplingSpec, InstrumentSpec, MeasurementProblem, ProductBasisIndex,
                    SystemSpec, build_full_hamiltonian, initial_state, swap_roles,
                    validate_problem)
from .oracle import (SpectrumReport, compare_spectra, full_spectrum, grid_bisect_roots,
                     partitioned_spectrum)
from .pipeline import Solution, solve_problem
from .realisation import (DensityGrid, Realisation, ReducedState, SampleRecord, boundary_match,
                          density, expected_density, localization_report, probabilities,
                          reduced_state, sample)
from .scenarios import (FIX_TA, FIX_TS, TwoSlitConfig, TwoSlitReport, build_two_slit,
                        dump_scenario, load_scenario, two_slit_report)
from .secular import (ChannelConstants, Classification, SecularRoots, SolutionCounts,
                      channel_constants, classify_realisations, count_solutions, find_roots,
                      secular_value)

__version__ = "0.1.0"
