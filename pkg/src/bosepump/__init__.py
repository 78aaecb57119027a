"""Exact few-photon dynamics of a modulated attractive Bose-Hubbard chain.

Subpackages cover the number-conserving Fock sector and sparse operators
(fockspace), the time-dependent Hamiltonian and pump paths (model), Krylov
propagation and transport observables (propagate), the trimer effective model
(effective), the mean-field layer (meanfield), lossy quantum-trajectory
dynamics (opensys), circuit parameter mapping (circuit), noise robustness
(robustness), and the experiment runner (cli).
"""

__version__ = "0.1.0"
