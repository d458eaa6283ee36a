"""Demonstration-guided continual RL benchmark on 2D navigation tasks."""

__version__ = "0.1.0"
