"""Quantum transfer matrix thermodynamics of the spin-1/2 XXZ chain at high temperature."""

__version__ = "0.1.0"
