"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Malformed or out-of-contract input (bad coordinates, non-monotone
    popularity, sizes outside supported ranges, ...)."""


class InfeasibleError(InvalidInputError):
    """The instance admits no feasible solution (e.g. K*N < M, so the
    catalog cannot even be stored once)."""


class InternalInvariantError(RuntimeError):
    """An invariant that should be impossible to violate was violated.
    Reaching this is a bug signal, not a user error."""
