"""orbitmeter: statistics of orbits whose time averages refuse to settle.

Layers, bottom up: :mod:`~orbitmeter.symbolic` (chains, words,
cylinders, codings), :mod:`~orbitmeter.frequency` (visit frequencies
and traces), :mod:`~orbitmeter.orbit` (construction of certified
oscillating prefixes), :mod:`~orbitmeter.eta` (cover measures along
orbits), :mod:`~orbitmeter.bowen` (heteroclinic sojourn model),
:mod:`~orbitmeter.markov` (ergodic decomposition and physicality),
:mod:`~orbitmeter.cesaro` (higher-order means), :mod:`~orbitmeter.cli`.
"""

__version__ = "0.1.0"

from .symbolic import TMC, CylinderSpec, PeriodicWord, Word  # noqa: F401
