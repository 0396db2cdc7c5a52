"""Kink interfaces of the ferromagnetic XXZ chain.

Submodules
----------
xxz_core               Hamiltonian, kink ground states, spectral decomposition.
kink_profiles          Infinite-volume q-series for the kink profile and matrix elements.
bessel                 Integer-order Bessel functions of the first kind.
stark_jacobi           The one-body Stark-Jacobi operator and its propagator.
graphs                 Signed compositions and closed-form simplex integrals.
perturbation_dynamics  Weak-field evolution, Dyson series and the reduced dynamics.
interface_motion       Magnetization profiles of a driven kink.
cli                    The ``xxzkink`` experiment driver.
"""

from .errors import (
    DomainError,
    IntegrationError,
    PreconditionError,
    ProjectionMismatchError,
    ResourceError,
    SingularityError,
    XXZKinkError,
)
from .policy import DEFAULT_POLICY, NumericPolicy
from .xxz_core import ChainSpec, build_hamiltonian, kink_ground_family, kink_state, q_from_delta, spectral_decomposition
from .kink_profiles import QSeriesPolicy, hopping_coefficient_a, magnetization_z, transverse_matrix_element
from .bessel import bessel_j
from .stark_jacobi import StarkJacobiParams, ZdFieldVector, propagator_kernel, zd_spectrum
from .perturbation_dynamics import FieldSpec, first_order_correction, propagate, reduced_evolution, scaling_experiment
from .interface_motion import UniformField3, m1, m3, m_general, phi_prime, profile_limit_fit

__all__ = [
    "DomainError",
    "IntegrationError",
    "PreconditionError",
    "ProjectionMismatchError",
    "ResourceError",
    "SingularityError",
    "XXZKinkError",
    "DEFAULT_POLICY",
    "NumericPolicy",
    "ChainSpec",
    "build_hamiltonian",
    "kink_ground_family",
    "kink_state",
    "q_from_delta",
    "spectral_decomposition",
    "QSeriesPolicy",
    "hopping_coefficient_a",
    "magnetization_z",
    "transverse_matrix_element",
    "bessel_j",
    "StarkJacobiParams",
    "ZdFieldVector",
    "propagator_kernel",
    "zd_spectrum",
    "FieldSpec",
    "first_order_correction",
    "propagate",
    "reduced_evolution",
    "scaling_experiment",
    "UniformField3",
    "m1",
    "m3",
    "m_general",
    "phi_prime",
    "profile_limit_fit",
]
