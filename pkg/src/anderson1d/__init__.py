"""Spectral and dynamical experiments for the one-dimensional white-noise Schroedinger operator
``H = -d^2/dt^2 + B'(t)``."""
__version__ = "0.1.0"

from .errors import (AccuracyError, Anderson1DError, ConfigurationError, DegenerateError, FitQualityError,
                     InsufficientHorizonError, MagnitudeOverflowError, NumericalError, PhaseMismatchError,
                     ResolutionError, UsageError)
from .noise import Grid, NoisePath, mollify, rng_stream, sample_brownian, zero_path
from .formulas import (QuadratureConfig, dos_laplace_transform, dos_N_exact, dos_n_exact, gamma_exact,
                       log_dos_N)
from .eigensolver import (DIRICHLET, BoundaryCondition, Eigenpair, decay_rate_fit, eigenfunction,
                          eigenvalue_count, kth_eigenvalue)
from .montecarlo import gamma_furstenberg, gamma_mc, invariant_density, oseledec_angle
from .weyl import green_kernel, m_function, m_infinity, weyl_circle
from .pam import DiscretePotential, kernel_vs_spectral, moment_identity_check, pam_kernel, pam_solve
