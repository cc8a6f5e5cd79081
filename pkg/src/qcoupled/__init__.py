"""Markov-modulated coupled random walks in the quarter plane."""

__version__ = "0.1.0"
