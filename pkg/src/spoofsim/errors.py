"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: config/validation problems exit 2,
adversary capacity violations exit 3.
"""


class SpoofSimError(Exception):
    """Base class for all package errors."""


# --- plant / diagonalization ---

class NonSimpleSpectrum(SpoofSimError):
    """A has a repeated eigenvalue (within tolerance)."""


class ComplexSpectrum(SpoofSimError):
    """A has eigenvalues with a non-negligible imaginary part."""


class SingularPsi(SpoofSimError):
    """Supplied or computed eigenvector matrix is not invertible."""


# --- graph robustness ---

class EmptySubset(SpoofSimError):
    """r-reachability queried on an empty subset."""


class EmptySourceSet(SpoofSimError):
    """Robustness queried with respect to an empty source set."""


class TooLarge(SpoofSimError):
    """Brute-force enumeration refused: too many non-source nodes."""


class WindowExceedsHorizon(SpoofSimError):
    """Joint robustness window longer than the switching horizon."""


# --- observers ---

class NotSchurStable(SpoofSimError):
    """Closed-loop observer matrix has spectral radius >= 1."""


class PlacementFailed(SpoofSimError):
    """Observer gain design did not produce a stable closed loop."""


class DimensionMismatch(SpoofSimError):
    """Vector/matrix dimensions do not agree."""


# --- DAG construction / verification ---

class CycleDetected(SpoofSimError):
    """Regular-parent subgraph contains a cycle (protocol violation)."""


class InsufficientParents(SpoofSimError):
    """Motif enumeration requires the full parent-count property."""


# --- filtering ---

class EmptyRetainedSet(SpoofSimError):
    """All neighbor estimates were trimmed; caller must apply the hold rule."""


# --- adversary ---

class CapacityExceeded(SpoofSimError):
    """A spoofer emission schedule violated its capacity ledger."""

    def __init__(self, message, step=None, evidence=None):
        super().__init__(message)
        self.step = step
        self.evidence = evidence


# --- configuration ---

class ConfigError(SpoofSimError):
    """Configuration failed to parse or validate; carries a field path."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
