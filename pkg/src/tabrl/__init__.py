"""Tabular reinforcement learning with reduced eligibility traces and Q-biased softmax selection."""
from ._backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
