"""
gdefinetti - Gaussian de Finetti reduction for continuous-variable QKD

Turns security against Gaussian collective attacks into security against
general attacks, at the price of an energy test on k extra modes and a
larger security parameter.

Core Features:
- Security-parameter engine (photon cutoff, eta*, volume T, composed eps')
- SU(2,2) coherent states on the symmetric subspace and their overlaps
- Monte-Carlo certification of the finite-energy resolution of identity
- Truncated Fock-space oracles for Gram matrices, overlaps and invariance
- Energy-test simulation with heterodyne statistics

Usage:
1. Command line: run 'gdefinetti params --help'
2. Library:
   from gdefinetti import ProtocolInput, compose_security
   derived = compose_security(ProtocolInput(n=10**6, k=10**5, d_A=2.5, d_B=2.5,
                                            eps_coll=1e-10, eps_test=1e-10))
"""

__version__ = "0.1.0"

from .core.coherent import LambdaMatrix, overlap
from .core.energytest import TestParams, failure_event_estimate, lemma36_probability
from .core.mathkit import LogReal
from .core.params import DerivedParams, ProtocolInput, compose_security, min_blocklength
from .core.subspace import gram_matrix, verify_definetti

__all__ = [
    "LogReal",
    "ProtocolInput",
    "DerivedParams",
    "compose_security",
    "min_blocklength",
    "LambdaMatrix",
    "overlap",
    "gram_matrix",
    "verify_definetti",
    "TestParams",
    "lemma36_probability",
    "failure_event_estimate",
]
