"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class DegenerateDensityError(ValueError):
    """A piecewise density carries no probability mass anywhere."""


class BoundPreconditionError(ValueError):
    """A closed-form bound was evaluated outside its validity region.

    ``guard`` names the violated precondition so callers (and the CLI,
    which maps this to a dedicated exit code) can report it.
    """

    def __init__(self, guard: str, message: str | None = None):
        super().__init__(message or f"bound precondition violated: {guard}")
        self.guard = guard
