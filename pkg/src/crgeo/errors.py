"""Exception types shared across the package.

The CLI maps these onto exit codes: input/parse problems exit 2, geometry
failures exit 3, invariant-suite breaches exit 4.
"""


class CrgeoError(Exception):
    """Base class for all errors raised by this package."""


class InputError(CrgeoError):
    """Malformed user input: DSL text, surface files, CLI parameters."""


class DslError(InputError):
    """Expression or surface-file text could not be parsed."""


class UnknownSurface(InputError):
    """Requested gallery surface name does not exist."""


class BadParams(InputError):
    """Gallery parameters are out of the admissible range."""


class DomainError(CrgeoError):
    """Numeric evaluation hit a singular subexpression (log 0, 1/0)."""

    def __init__(self, message, subexpression=None):
        super().__init__(message)
        self.subexpression = subexpression


class GeometryError(CrgeoError):
    """Base class for per-point geometric failures."""


class NotOnSurface(GeometryError):
    """|rho(p)| exceeds the on-surface tolerance."""


class DegenerateFrame(GeometryError):
    """All first derivatives of rho are below the frame threshold."""


class NotStrictlyPseudoconvex(GeometryError):
    """Levi matrix has a non-positive eigenvalue at the point."""


class SingularSystem(GeometryError):
    """Transverse linear system is rank-deficient (cond > 1e12)."""


class NonpositiveJ(GeometryError):
    """Bordered-Hessian determinant is not positive where required."""


class RankDeficientNormalBasis(GeometryError):
    """Orthonormal basis of the normal space could not be completed."""


class NotPluriharmonic(GeometryError):
    """Ambient extension has a nonvanishing mixed second derivative."""


class NotEigenmap(GeometryError):
    """No common eigenvalue fits the componentwise Kohn-Laplacian test."""


class ZeroEnergy(GeometryError):
    """All map components are CR; the tension quotient is undefined."""


class NoCrossing(GeometryError):
    """Ray from the star center misses the surface within t_max."""


class NonTransversal(GeometryError):
    """Radial root found, but the ray is tangent to the surface there."""


class NotStarShaped(GeometryError):
    """Surface cannot be charted radially from the requested center."""
