"""
flusim - Agent-Based Pandemic Influenza Simulator

Stochastic multi-agent simulation of influenza spread over a census-derived
population, built on a nine-state extension of the SIR model, with injectable
control strategies and a classical SIR ODE baseline for validation.
"""

__version__ = "1.0.0"
__author__ = "flusim developers"

from flusim.config import Settings

__all__ = ["Settings", "__version__"]
