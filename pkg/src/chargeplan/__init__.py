"""Multi-period fast-charging facility planning for highway freight traffic."""

__version__ = "0.1.0"
