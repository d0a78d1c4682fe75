"""Exception hierarchy shared by every module."""


class DWTunnelError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(DWTunnelError, ValueError):
    """An argument lies outside the region where a routine is defined."""


class PoleError(DomainError):
    """Evaluation at a pole of the gamma function."""


class StructureError(DWTunnelError, ValueError):
    """A potential does not have the expected double-well shape."""


class RegimeError(DWTunnelError, ValueError):
    """An approximation was requested outside its regime of validity."""


class ConvergenceError(DWTunnelError, RuntimeError):
    """A numerical procedure failed to reach its accuracy target."""


class DegenerateError(DWTunnelError, ValueError):
    """A quantity needed as a divisor is (numerically) zero."""
