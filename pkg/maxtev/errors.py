from pathlib import Path
from typing import Any

import apischema

from maxtev.types import FileType


class MaxtevError(Exception):
    """Base class of every error raised by maxtev."""


class ConfigError(MaxtevError):
    """maxtev configuration error."""

    def __init__(self, message: str, *, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class NoConfigFileError(ConfigError):
    def __init__(self, paths: list[Path]):
        self._paths = paths
        super().__init__(str(self))

    def __str__(self) -> str:
        return (
            f"No config files in the following paths:"
            f" {', '.join(map(str, self._paths))}"
        )


class ValidationError(ConfigError):
    def __init__(self, filename: str, errors: apischema.ValidationError):
        self._filename = filename
        self._errors = errors
        super().__init__(str(self))

    def __str__(self) -> str:
        filename = self._filename
        errors = self._errors
        return f"Errors found in {filename}: {errors}"


class UnsupportedFileType(ConfigError):
    """The imported file is not supported."""

    def __init__(
        self, *, file_type: FileType | None = None, filename: str | None = None
    ):
        if file_type is None and filename is not None:
            msg = f"Cannot detect type for file '{filename}'"
        elif filename is None and file_type is not None:
            msg = f"{file_type.name} is not supported."
        elif file_type is not None:
            msg = f"{file_type.name} is not supported for file '{filename}'."
        else:
            msg = "Unsupported file type."
        super().__init__(msg)

        self.file_format = file_type
        self.filename = filename


# mesh


class MeshError(MaxtevError):
    pass


class NonManifoldFace(MeshError):
    def __init__(self, face: tuple[int, int, int], count: int):
        super().__init__(f"Face {face} is shared by {count} tetrahedra.")
        self.face = face
        self.count = count


class InvertedTet(MeshError):
    def __init__(self, tet: int, volume: float):
        super().__init__(f"Tetrahedron {tet} has non-positive volume {volume:.3e}.")
        self.tet = tet
        self.volume = volume


# elements


class DegenerateTet(MaxtevError):
    def __init__(self, det: float):
        super().__init__(f"Degenerate tetrahedron: |det J| = {abs(det):.3e}.")
        self.det = det


class UnsupportedOrder(MaxtevError):
    def __init__(self, order: int, *, supported: tuple[int, ...] = (0, 1)):
        super().__init__(
            f"Order {order} is not supported (supported: "
            f"{', '.join(map(str, supported))})."
        )
        self.order = order


class UnsupportedDegree(MaxtevError):
    def __init__(self, degree: int, *, low: int = 1, high: int = 10):
        super().__init__(f"Quadrature degree {degree} outside [{low}, {high}].")
        self.degree = degree


# coefficients


class UnknownPreset(MaxtevError):
    def __init__(self, name: str, known: list[str]):
        super().__init__(f"Unknown preset '{name}'. Known: {', '.join(known)}.")
        self.name = name


class NotHermitian(MaxtevError):
    pass


class NoCaseMatch(MaxtevError):
    """Sampled bounds of A or N straddle 1."""

    def __init__(self, bounds: Any):
        super().__init__(
            "Coefficient bounds match none of the admissible cases: "
            f"{bounds}."
        )
        self.bounds = bounds


# spaces and assembly


class SpaceMismatch(MaxtevError):
    pass


class DimensionMismatch(MaxtevError):
    pass


# eigensolver


class FactorizationFailed(MaxtevError):
    def __init__(self, shift: complex, reason: str = ""):
        msg = f"Factorization of K - sigma*M failed at sigma={shift:.6g}"
        super().__init__(f"{msg}: {reason}" if reason else msg + ".")
        self.shift = shift


class NoConvergence(MaxtevError):
    """Fewer eigenpairs than requested met the residual contract.

    The partial result is kept in `result`.
    """

    def __init__(self, requested: int, converged: int, result: Any = None):
        super().__init__(
            f"Only {converged} of {requested} eigenpairs converged."
        )
        self.requested = requested
        self.converged = converged
        self.result = result


class DimensionTooLarge(MaxtevError):
    def __init__(self, dimension: int, limit: int):
        super().__init__(
            f"Dense computation requested for dimension {dimension} > {limit}."
        )
        self.dimension = dimension
        self.limit = limit


class NoEigenvaluesInWindow(MaxtevError):
    pass


# verification and harness


class CaseUnsupported(NoCaseMatch):
    """T-coercivity requested for coefficients outside the admissible cases."""


class SingularSystem(MaxtevError):
    pass


class InsufficientData(MaxtevError):
    pass


class DegenerateError(MaxtevError):
    """|k_j - k_{j,h}| underflows, the convergence rate is undefined."""


class StudyError(MaxtevError):
    def __init__(self, n: int, cause: Exception):
        super().__init__(f"n={n}: {cause}")
        self.n = n
        self.cause = cause
