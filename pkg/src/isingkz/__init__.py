"""Kibble-Zurek ramps, kink-pair BCS theory and exact diagonalization for Ising chains.

Modules
-------
protocols   model parameters, field protocols and momentum grids
integrable  free-fermion solution of the nearest-neighbour chain
bcs         self-consistent kink BCS theory of the J2 = 1 chain
pairmodel   bosonic pair model and the driven pair oscillator
ed          symmetry-resolved exact diagonalization and real-time evolution
analysis    spectral peaks, damped-sinusoid and power-law fits
cli         scenario runner (``isingkz`` command)
"""
__version__ = "0.1.0"

from .errors import (BracketError, ConvergenceError, DomainError, IntegrationError,
                     IsingKZError, NumericalError)
from .protocols import INFINITE, ModelParams, MomentumGrid, RampKind, RampProtocol, momentum_grid, ramp_value

__all__ = [
    "__version__",
    "BracketError", "ConvergenceError", "DomainError", "IntegrationError", "IsingKZError", "NumericalError",
    "INFINITE", "ModelParams", "MomentumGrid", "RampKind", "RampProtocol", "momentum_grid", "ramp_value",
]
