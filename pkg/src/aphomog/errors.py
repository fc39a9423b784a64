"""Exception types shared across the package."""

from __future__ import annotations

import numpy as np


class EllipticityViolation(ValueError):
    """A sampled Rayleigh quotient of the symmetric part was nonpositive.

    Carries the witness pair (point, direction).
    """

    def __init__(self, point, direction, quotient):
        self.point = np.asarray(point, dtype=float)
        self.direction = np.asarray(direction, dtype=float)
        self.quotient = float(quotient)
        super().__init__(
            f"nonpositive Rayleigh quotient {self.quotient:.3e} "
            f"at y={self.point.tolist()}"
        )


class ResonantFrequencies(ValueError):
    """An exact integer relation n . lambda = 0 was found."""

    def __init__(self, witness):
        self.witness = np.asarray(witness, dtype=int)
        super().__init__(f"frequencies rationally dependent, witness n={self.witness.tolist()}")


class NonConverged(RuntimeError):
    """Krylov iteration exhausted its budget.

    Carries the final relative residual and the iteration count.
    """

    def __init__(self, residual, iterations):
        self.residual = float(residual)
        self.iterations = int(iterations)
        super().__init__(
            f"solver did not converge: relative residual {self.residual:.3e} "
            f"after {self.iterations} iterations"
        )


class UnsupportedDimension(ValueError):
    """Operation not implemented for this dimension (use a bound instead)."""
