"""Time maps and solution counts for an indefinite Neumann problem."""

__version__ = "0.1.0"
