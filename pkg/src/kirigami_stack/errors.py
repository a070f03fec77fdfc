"""Exception hierarchy.

Every domain error carries a stable ``code`` string that the CLI prints as
``error[<code>]: <message>`` and maps to exit status 1.
"""


class KirigamiError(Exception):
    code = "E_DOMAIN"


# voxel_surface
class EmptyMesh(KirigamiError):
    code = "E_EMPTY_MESH"


class ResolutionTooLow(KirigamiError):
    code = "E_RESOLUTION_TOO_LOW"


class NoShell(KirigamiError):
    code = "E_NO_SHELL"


class NonManifoldUnresolvable(KirigamiError):
    code = "E_NONMANIFOLD"


class ThicknessTooLarge(KirigamiError):
    code = "E_THICKNESS_TOO_LARGE"


class DisconnectedShell(KirigamiError):
    code = "E_DISCONNECTED_SHELL"

    def __init__(self, n_components):
        super().__init__(f"panel network has {n_components} disconnected components")
        self.n_components = n_components


# stripifier
class TwoFactorNotFound(KirigamiError):
    code = "E_TWO_FACTOR"


class MergeStuck(KirigamiError):
    code = "E_MERGE_STUCK"

    def __init__(self, n_cycles):
        super().__init__(f"no splice site available with {n_cycles} cycles remaining")
        self.n_cycles = n_cycles


class CycleNotFound(KirigamiError):
    code = "E_CYCLE_NOT_FOUND"

    def __init__(self, message, remaining_cycles=None):
        super().__init__(message)
        self.remaining_cycles = remaining_cycles


# stacker
class IndexOutOfRange(KirigamiError, IndexError):
    code = "E_INDEX_OUT_OF_RANGE"


class DeltaTooLarge(KirigamiError, ValueError):
    code = "E_DELTA_TOO_LARGE"


class PlanSumMismatch(KirigamiError, ValueError):
    code = "E_PLAN_SUM"


class InfeasibleStacking(KirigamiError):
    """Raised when a pile program cannot be realized along a strip."""

    code = "E_INFEASIBLE_STACKING"

    def __init__(self, reason, hinge=None):
        where = "" if hinge is None else f" (hinge {hinge})"
        super().__init__(reason + where)
        self.reason = reason
        self.hinge = hinge


# fold_kinematics
class AngleOutOfRange(KirigamiError, ValueError):
    code = "E_ANGLE_OUT_OF_RANGE"


class LengthMismatch(KirigamiError, ValueError):
    code = "E_LENGTH_MISMATCH"


class InfeasiblePlacement(KirigamiError):
    code = "E_INFEASIBLE_PLACEMENT"


# transformer
class FaceCountMismatch(KirigamiError):
    code = "E_FACE_COUNT_MISMATCH"


class ShapeUnrealizable(KirigamiError):
    code = "E_SHAPE_UNREALIZABLE"


# io_harness
class ParseError(KirigamiError):
    code = "E_PARSE"

    def __init__(self, message, line=None):
        prefix = "" if line is None else f"line {line}: "
        super().__init__(prefix + message)
        self.line = line


class UnsupportedFeature(KirigamiError):
    code = "E_UNSUPPORTED"


class SchemaError(KirigamiError):
    code = "E_SCHEMA"

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
