"""On-demand cooking process planning and scheduling with MOEA/D."""

__version__ = "0.1.0"
