"""Exception types raised by qfimkit."""


class QfimkitError(Exception):
    """Base class for all qfimkit errors."""


class DomainError(QfimkitError, ValueError):
    """A parameter point lies outside the model's declared domain."""


class BoundaryError(DomainError):
    """A finite-difference stencil would leave the parameter domain."""


class ModelError(QfimkitError):
    """A model produced a state that violates the density-matrix invariants."""


class CutoffError(ModelError):
    """A truncated basis discards more probability than allowed."""


class DimensionMismatch(QfimkitError, ValueError):
    pass


class InvalidForMixed(QfimkitError, ValueError):
    pass


class RangeError(QfimkitError, ValueError):
    """A weight matrix puts weight on a direction the information matrix cannot see."""


class QuadratureError(QfimkitError):
    pass


class SupportLeakError(QfimkitError):
    """The state derivative has weight on the kernel-kernel block of the state.

    This means the rank of the state changes at the evaluation point, so the
    QFIM computed from the SLD is not the limit of its neighbours.

    Attributes
    ----------
    leak_norms : dict[int, float]
        Max-entry norm of the leaked block, keyed by parameter index.
    """

    def __init__(self, leak_norms, message=None):
        self.leak_norms = dict(leak_norms)
        if message is None:
            parts = ", ".join(f"param {i}: {v:.3e}" for i, v in self.leak_norms.items())
            message = f"derivative leaks outside the support of rho ({parts})"
        super().__init__(message)

    @property
    def indices(self):
        return sorted(self.leak_norms)

    @property
    def leak_norm(self):
        return max(self.leak_norms.values())
