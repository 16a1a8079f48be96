"""Batch renderer for orbitmeter trace CSVs.

Consumes only the CLI's published artifacts (the ``n,value,target,
orbit_id`` trace schema and its JSON reports); the figures are static
oscillation evidence, rendered offline and deterministically.
"""

__version__ = "0.1.0"
