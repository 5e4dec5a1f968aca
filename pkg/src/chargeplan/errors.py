"""Exception hierarchy shared by the planning pipeline."""

from __future__ import annotations


class ChargePlanError(Exception):
    """Base class for all package errors."""


class InputError(ChargePlanError):
    """Bad user input: files, configuration or data selections."""


class MalformedFile(InputError):
    def __init__(self, path, message, line=None):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {message}")


class DanglingArc(InputError):
    """An arc references a missing node or loops back on itself."""


class EmptySelection(InputError):
    """No flow records survive the class/window filter."""


class NoDemandData(InputError):
    pass


class DuplicateSiteId(InputError):
    pass


class ConfigError(InputError):
    pass


class TooFewNodes(InputError):
    pass


class DisconnectedGraph(InputError):
    def __init__(self, components):
        self.components = [sorted(c) for c in components]
        sizes = ", ".join(str(len(c)) for c in self.components)
        super().__init__(
            f"graph is disconnected: {len(self.components)} components (sizes {sizes})"
        )


class DowngradeAttempt(ChargePlanError):
    """A decision would shrink a facility built in an earlier horizon."""


class NoFeasibleSolution(ChargePlanError):
    def __init__(self, message, horizon=None):
        self.horizon = horizon
        super().__init__(message)


class InvariantError(ChargePlanError):
    """Internal consistency check failed."""
