"""Spin squeezing of a finite-temperature two-component Bose gas after a pi/2 pulse."""
__version__ = "0.1.0"
