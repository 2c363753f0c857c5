"""Exception hierarchy shared by every module of the package."""


class QESError(Exception):
    """Base class for construction and verification errors."""


# -- generating sets ---------------------------------------------------------

class LambdaSumNonzero(QESError):
    def __init__(self, total):
        super().__init__(f"LambdaSumNonzero: separation constants sum to {total!r}, expected 0")
        self.total = total


class NonpositiveEpsilon(QESError):
    def __init__(self, epsilon):
        super().__init__(f"NonpositiveEpsilon: gap must be > 0, got {epsilon!r}")
        self.epsilon = epsilon


class MultivariatePhi(QESError):
    def __init__(self, axis, names=()):
        extra = f" (depends on {', '.join(sorted(names))})" if names else ""
        super().__init__(f"MultivariatePhi: phi of axis {axis} must depend on its own variable only{extra}")
        self.axis = axis


class DegeneratePhi(QESError):
    def __init__(self, axis):
        super().__init__(f"DegeneratePhi: derivative of phi on axis {axis} vanishes identically")
        self.axis = axis


class InconsistentZeros(QESError):
    def __init__(self, axis, demanded=()):
        super().__init__(
            f"InconsistentZeros: zeros of phi' on axis {axis} demand different lambda values {list(demanded)}"
        )
        self.axis = axis
        self.demanded = list(demanded)


class ConstraintViolated(QESError):
    def __init__(self, total):
        super().__init__(f"ConstraintViolated: forced lambda values sum to {total!r} and no axis is free")
        self.total = total


class NonsimpleZero(QESError):
    def __init__(self, axis, z):
        super().__init__(f"NonsimpleZero: phi' on axis {axis} has a higher-order zero at {z!r}")
        self.axis = axis
        self.z = z


class UnknownZeros(QESError):
    def __init__(self, axis):
        super().__init__(
            f"UnknownZeros: phi' on axis {axis} is not a polynomial; declare its real zeros explicitly"
        )
        self.axis = axis


class NonintegrableSingularity(QESError):
    def __init__(self, location):
        super().__init__(f"NonintegrableSingularity near x = {location!r}")
        self.location = location


# -- model assembly ----------------------------------------------------------

class TieNotOrthogonal(QESError):
    def __init__(self, max_violation, point):
        super().__init__(
            f"TieNotOrthogonal: |(grad tie, grad phi)| reaches {max_violation:.3e} at {tuple(point)}"
        )
        self.max_violation = max_violation
        self.point = tuple(point)


class SingularTie(QESError):
    def __init__(self, point):
        super().__init__(
            f"SingularTie: tie function is not finite at {tuple(point)}; pass allow_singular_tie to accept it"
        )
        self.point = tuple(point)


class SingularF(QESError):
    def __init__(self, point):
        super().__init__(f"SingularF: axis antiderivative diverges inside the box near {point!r}")
        self.point = point


class PhiWithoutNode(QESError):
    def __init__(self):
        super().__init__("PhiWithoutNode: phi keeps one sign on the box, so psi1 cannot be an excited state")


# -- discretisation and spectra ----------------------------------------------

class OverflowingGrid(QESError):
    def __init__(self, m):
        super().__init__(f"OverflowingGrid: {m} interior points exceed 2^31")
        self.m = m


class SingularPotential(QESError):
    def __init__(self, point):
        super().__init__(f"SingularPotential: V is not finite at grid node {tuple(point)}")
        self.point = tuple(point)


class DimensionMismatch(QESError):
    def __init__(self, expected, got):
        super().__init__(f"DimensionMismatch: expected length {expected}, got {got}")


class NoConvergence(QESError):
    def __init__(self, iterations):
        super().__init__(f"NoConvergence after {iterations} iterations")
        self.iterations = iterations


class TooLarge(QESError):
    def __init__(self, m):
        super().__init__(f"TooLarge: dense oracle limited to 3000 unknowns, got {m}")
        self.m = m


class EmptyWindow(QESError):
    def __init__(self, window):
        super().__init__(f"EmptyWindow: no eigenvalue in [{window[0]}, {window[1]}]")
        self.window = tuple(window)


class MissingLevel(QESError):
    def __init__(self, level):
        super().__init__(f"MissingLevel: no computed eigenvalue near {level!r}")
        self.level = level


class ConfigError(QESError):
    """Malformed or inconsistent run configuration."""
