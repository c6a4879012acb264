"""Digital-twin-driven task assignment for aerial edge computing.

A desk-scale simulator around three pieces: a convex per-coalition
resource allocator, a merge/split coalition-formation engine with
warm-start support, and a slotted harness that sweeps scenarios and
writes delimited metrics.
"""

__version__ = "0.1.0"
