"""Simulation and analysis of nonstabilizerness ("magic") dynamics in
disordered quantum spin chains.

Subpackages:
    qstate     -- product / Hamming-localized state constructors
    pauli      -- bitmask Pauli strings and expectation kernels
    magic      -- stabilizer Renyi entropies, Z-gate weight, Pauli sampling
    models     -- disordered TFIM and l-bit model builders
    propagate  -- Chebyshev and diagonal time evolution
    entangle   -- bipartite entanglement entropy
    theory     -- analytical oracles and fitting routines
    harness    -- disorder-ensemble orchestration and persistence
"""

__version__ = "0.1.0"
