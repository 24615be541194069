"""Exception types shared across the package."""


class LgcportError(Exception):
    """Base class for all package errors."""


class DegenerateSampleError(LgcportError):
    """A sample column has zero variance, so no bandwidth or fit exists."""


class InsufficientLocalDataError(LgcportError):
    """Effectively no observations near the requested grid point."""

    def __init__(self, message, effective_weight=None):
        super().__init__(message)
        self.effective_weight = effective_weight


class NonConvergenceError(LgcportError):
    """Local likelihood optimizer stopped before meeting the gradient tolerance."""

    def __init__(self, message, params=None, diagnostics=None):
        super().__init__(message)
        self.params = params
        self.diagnostics = diagnostics


class InsufficientDataError(LgcportError):
    """Too few observations for the requested statistic."""


class NonSymmetricError(LgcportError):
    """Matrix argument must be symmetric."""


class InfeasibleError(LgcportError):
    """Constraint set of the weight problem is empty."""


class SolverError(LgcportError):
    """Weight solver failed to produce a KKT-verified solution."""


class PortfolioWipeoutError(LgcportError):
    """Portfolio value hit zero or below, weight drift is undefined."""


class PanelParseError(LgcportError):
    """Input file failed to parse; message carries row/column context."""


class PanelAlignmentError(LgcportError):
    """Rows of the input file disagree with the header layout."""


class ConfigError(LgcportError):
    """Invalid run configuration."""
