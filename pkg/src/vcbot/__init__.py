"""Hierarchical variational RNN with online free-energy minimization,
plus the shared-control experiment built around it."""

__version__ = "0.1.0"
