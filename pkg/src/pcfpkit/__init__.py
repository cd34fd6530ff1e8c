"""Control-state reduction for probabilistic guarded-command programs."""

__version__ = "0.1.0"
