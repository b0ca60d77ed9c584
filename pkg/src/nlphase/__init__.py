"""Measurement-induced nonlinear phase gates: exact gain algebra and wavefunction simulation."""
__version__ = "0.1.0"
