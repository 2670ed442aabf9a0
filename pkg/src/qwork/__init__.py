"""Quantum and classical work statistics: TPM/OBS POVMs, classical limits and the ramped oscillator."""

__version__ = "0.1.0"
