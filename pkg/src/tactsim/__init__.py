"""Base-station sleep scheduling with transfer actor-critic learning."""

__version__ = "0.1.0"
