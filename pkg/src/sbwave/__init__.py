"""Computer-assisted existence and stability proofs for traveling waves of the
suspension bridge equation on an infinite strip.

Submodules: interval, sequences, symbols, approximation, aliasing, operators,
bounds, stability, certificate, pipeline, cli.
"""

__version__ = "0.1.0"
