from enum import Enum, auto


class FileType(Enum):
    JSON = auto()
    YAML = auto()
    TOML = auto()


class Domain(str, Enum):
    CUBE = "cube"
    THICK_L = "thickL"


class Command(str, Enum):
    MESH = "mesh"
    SOLVE = "solve"
    CONVERGE = "converge"
    VERIFY = "verify"
    EXPORT = "export"


class OutputFormat(str, Enum):
    CSV = "csv"
    VTK = "vtk"
    MM = "mm"
    TXT = "txt"


class FieldComponent(str, Enum):
    """Which part of an eigenfunction pair is exported."""

    V = "v"
    W = "w"
    W_MINUS_V = "w-minus-v"


class Form(str, Enum):
    A = "a"
    C = "c"


class CoefficientKind(str, Enum):
    CONSTANT_SCALAR = "constant-scalar"
    SCALAR_FUNCTION = "scalar-function"
    MATRIX_FUNCTION = "matrix-function"


class TVariant(str, Enum):
    """DOF-level isomorphisms used by the T-coercivity checks."""

    W_2W_MINUS_V = "(w,2w-v)"
    W_MINUS_2V = "(w-2v,-v)"
