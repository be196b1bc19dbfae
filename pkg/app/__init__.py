"""E-SAV / RE-SAV gradient-flow solver."""

__version__ = "1.0.0"

