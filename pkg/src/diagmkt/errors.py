"""Exception hierarchy shared across the package."""


class DiagmktError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidParameters(DiagmktError):
    """Inputs failed validation; carries the offending report."""

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(report.violations))


class NoConvergence(DiagmktError):
    """Root iteration exhausted its budget (pathological tolerances)."""


class DegeneratePricing(DiagmktError):
    """Price carries no information (B = 0, the theta -> -1 limit)."""


class DegenerateClearing(DiagmktError):
    """The linear market-clearing coefficient on the price is zero."""


class MultipleRoots(DiagmktError):
    """A scan found more than one candidate root where one was expected."""


class NoRoot(DiagmktError):
    """No sign change found on the scan range."""


class Infeasible(DiagmktError):
    """The requested quantity lies outside the feasible policy range."""
