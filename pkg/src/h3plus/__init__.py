"""Variational Born-Oppenheimer ground state of H3+ with explicitly
correlated trial functions and adaptive six-dimensional cubature."""
from .ansatz import PSI0, PSI0_HL, AnsatzParameters, ExpandedAnsatz, expand, evaluate, load_parameters
from .cubature import CubatureResult, adaptive_integrate
from .errors import *  # noqa: F401,F403
from .geometry import R_EQ, TriangleGeometry, build_triangle, distances
from .hamiltonian import EnergyBreakdown, IntegrationSettings, local_energy, variational_energy
from .observables import ObservableSet, expectation_values
from .optimize import OptimizationStage, minimize
from .vmc import VmcSettings, vmc_run

__version__ = "0.1.0"
