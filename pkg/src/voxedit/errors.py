"""Exception types shared across voxedit."""


class VoxEditError(Exception):
    """Base class for every error raised by this package."""


class EmptySet(VoxEditError, ValueError):
    pass


class BadFactor(VoxEditError, ValueError):
    pass


class NumericFault(VoxEditError, ArithmeticError):
    """Non-finite state/velocity or a degenerate step.

    ``step_index`` is filled in by the integrators when the fault happened
    inside a schedule loop.
    """

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class TrainingFault(VoxEditError, RuntimeError):
    pass


class UnknownPart(VoxEditError, KeyError):
    pass


class ShapeFault(VoxEditError, ValueError):
    pass


class EmptyAsset(VoxEditError, ValueError):
    pass


class GuidanceSchemaFault(VoxEditError, ValueError):
    pass


class FixtureMiss(VoxEditError, LookupError):
    pass


class ProviderTimeout(VoxEditError, TimeoutError):
    pass


class BadPartCount(VoxEditError, ValueError):
    pass


class StageFault(VoxEditError, RuntimeError):
    """Pipeline failure tagged with the stage it happened in."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
