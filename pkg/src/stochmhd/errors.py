"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Bad user-supplied configuration (lattice size, time step, forcing file, ...)."""


class OutOfLatticeError(KeyError):
    """A wavevector outside the truncation lattice was used as an index."""


class ConstraintError(ValueError):
    """A vector violates the orthogonality (divergence-free) constraint of its mode."""


class BlowUpError(RuntimeError):
    """Numerical blow-up during integration.

    Carries the offending trajectory index, mode and time, plus whatever
    partial output was accumulated before the abort.
    """

    def __init__(self, message, time=None, mode=None, trajectory=None, partial=None):
        super().__init__(message)
        self.time = time
        self.mode = mode
        self.trajectory = trajectory
        self.partial = partial
