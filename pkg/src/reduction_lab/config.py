from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by the solver stages.

    ``tol_pole`` is relative to the local pole spacing (or to 1 for an
    isolated pole). ``tol_residue`` is relative to the largest residue of a
    channel. ``tol_mean_field`` bounds the mismatch between a secular root
    and the effective channel matrix's eigenvalue (or Rayleigh quotient)
    belonging to the channel-0 vector of its reduced state.
    """

    tol_root: float = 1e-10
    tol_pole: float = 1e-8
    tol_residue: float = 1e-14
    oracle_tol: float = 1e-8
    tol_mean_field: float = 5e-2
    max_iter: int = 200

    def __post_init__(self):
        for name in ("tol_root", "tol_pole", "tol_residue", "oracle_tol", "tol_mean_field"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


DEFAULT_TOLERANCES = Tolerances()
