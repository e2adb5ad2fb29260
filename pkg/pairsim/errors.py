from typing import Optional


class PairSimError(Exception):
    """Base class for all errors raised by pairsim.

    `category` is a stable snake_case tag the command line prints in front of
    the message, so scripts can tell failures apart without parsing prose.
    """

    category = "pairsim_error"


class DegenerateFeatureError(PairSimError, ValueError):
    category = "degenerate_feature"

    def __init__(self, message: str = "degenerate feature"):
        super().__init__(message)


class EmptySimilaritySideError(PairSimError, ValueError):
    category = "empty_similarity_side"

    def __init__(self, message: str = "empty similarity side"):
        super().__init__(message)


class InvalidParamsError(PairSimError, ValueError):
    category = "invalid_params"


class ReducedModeRequiredError(PairSimError, ValueError):
    category = "reduced_mode_required"

    def __init__(self, message: str = "gradients defined for reduced mode"):
        super().__init__(message)


class DegenerateBoundaryError(PairSimError, ValueError):
    category = "degenerate_boundary"

    def __init__(self, message: str = "degenerate boundary"):
        super().__init__(message)


class DatasetParseError(PairSimError, ValueError):
    category = "dataset_parse"

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CheckpointError(PairSimError, ValueError):
    category = "checkpoint"


class InsufficientImpostorsError(PairSimError, ValueError):
    category = "insufficient_impostors"

    def __init__(self, message: str = "insufficient impostor pairs"):
        super().__init__(message)


class SamplingError(PairSimError, ValueError):
    category = "sampling"


class TrainingDivergedError(PairSimError, ArithmeticError):
    category = "training_diverged"
