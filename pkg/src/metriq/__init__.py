"""Metrical quantization laboratory: coherent states, anti-normal quantization,
Wiener-regularized phase-space path integrals and their Fock-space oracles."""

__version__ = "0.1.0"
