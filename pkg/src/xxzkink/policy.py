"""Numerical tolerances shared by every module.

All thresholds live in one frozen record so a sweep can tighten or loosen
them in a single place.  ``DEFAULT_POLICY`` carries the stock values.
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class NumericPolicy:
    # chain parameters
    q_consistency: float = 1e-12
    hermitian: float = 1e-12
    # ground space
    kernel_threshold: float = 1e-10
    ground_residual: float = 1e-10
    orthonormality: float = 1e-10
    # spectral decomposition
    cluster_tol: float = 1e-9
    max_sites: int = 14
    dense_dim_cap: int = 4096
    pseudo_inverse_cutoff: float = 1e-10
    # time stepping
    propagate_tol: float = 1e-8
    max_steps: int = 2 ** 16
    # q-series
    series_tail: float = 1e-16
    truncation_radius: int = 60
    # projections
    projection_tol: float = 1e-10

    def with_(self, **changes) -> "NumericPolicy":
        return replace(self, **changes)


DEFAULT_POLICY = NumericPolicy()
