class FellerLabError(Exception):
    """Base class for all library errors."""


class JumpRateUndefined(FellerLabError, ValueError):
    def __init__(self, msg="jump-rate undefined"):
        super().__init__(msg)


class InadmissibleParams(FellerLabError, ValueError):
    pass


class NTooSmall(FellerLabError, ValueError):
    """Residual boundary probability is negative at this resolution."""

    def __init__(self, n, residual, n_min):
        self.n = n
        self.residual = residual
        self.n_min = n_min
        super().__init__(
            f"n too small: residual probability {residual:.6g} < 0 at n={n}; "
            f"smallest admissible n found by doubling: {n_min}"
        )


class BudgetExceeded(FellerLabError, RuntimeError):
    pass


class SingularSystem(FellerLabError, ValueError):
    def __init__(self, determinant):
        self.determinant = determinant
        super().__init__(f"singular boundary system (determinant={determinant!r})")


class QuadratureFailure(FellerLabError, RuntimeError):
    pass
