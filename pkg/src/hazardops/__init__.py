"""Operator-learning metamodels for nonlinear structural response to seismic excitation."""

__version__ = "0.1.0"
