"""amplab: approximate message passing, state evolution and universality
experiments for structured random matrices."""

__version__ = "0.1.0"
