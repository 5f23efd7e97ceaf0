"""
ec3lab - fast-signal adiabatic EC3 laboratory
Statevector simulation of dressed adiabatic evolution, randomized Trotter runs and MS gate compilation
"""

__version__ = "0.1.0"
