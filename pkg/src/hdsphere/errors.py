"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: validation and domain problems exit 1,
numeric failures exit 2.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition (shape, norm, ordering...)."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of a function."""


class DegeneracyError(ValidationError):
    """Coincident eigenvalues where a formula needs them distinct."""


class PracticalityError(RuntimeError):
    """A computation is valid but too expensive to run (e.g. a sampler whose
    acceptance rate collapsed)."""


class NumericError(ArithmeticError):
    """A numerical routine failed to converge or lost all precision.

    Extra keyword arguments are kept in ``diagnostics`` so callers can see how
    far the routine got.
    """

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in sorted(self.diagnostics.items()))
        return f"{base} ({extra})"
