"""Spectral lower bounds and dilation analysis for a non-self-adjoint
harmonic oscillator with a bounded imaginary potential."""

__version__ = "0.1.0"
