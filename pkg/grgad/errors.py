"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class GrGADError(Exception):
    exit_code = 5


class ConfigError(GrGADError, ValueError):
    exit_code = 2


class MissingArtifactError(GrGADError, FileNotFoundError):
    exit_code = 3

    def __init__(self, artifact: str, path):
        super().__init__(f"missing artifact '{artifact}' (expected at {path})")
        self.artifact = artifact
        self.path = path


class GraphFormatError(GrGADError, ValueError):
    exit_code = 4


class EmptyGraphError(GrGADError, ValueError):
    pass


class ShapeError(GrGADError, ValueError):
    pass


class NonFiniteError(GrGADError, ArithmeticError):
    pass


class TrainingDivergedError(NonFiniteError):
    pass


class DegenerateViewError(GrGADError, ValueError):
    pass


class InsufficientGroupsError(GrGADError, ValueError):
    pass


class PlacementError(GrGADError, RuntimeError):
    pass


class EvaluationError(GrGADError, ValueError):
    pass


class StageError(GrGADError):
    """A pipeline stage failed; wraps the original exception."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", GrGADError.exit_code)
