"""Domain error hierarchy.

Every failure mode the library reports deliberately derives from WxError,
so callers (and the CLI) can distinguish domain errors from genuine bugs.
"""


class WxError(Exception):
    """Base class for all domain errors raised by this package."""


# schema
class UnknownSchema(WxError):
    pass


class ChannelNotFound(WxError, KeyError):
    def __str__(self) -> str:  # KeyError would repr() the message
        return Exception.__str__(self)


class IndexOutOfRange(WxError, IndexError):
    pass


# tensor / stats files
class IoError(WxError):
    pass


class FormatError(WxError):
    pass


class CorruptFile(WxError):
    pass


class InvalidData(WxError):
    pass


class StatsIncomplete(WxError):
    pass


class InvalidStats(WxError):
    pass


class DuplicateStats(WxError):
    pass


# normalization
class StateFlagError(WxError):
    pass


# steppers
class StepperFailed(WxError):
    def __init__(self, message: str, exit_code: int | None = None, stderr: str = ""):
        super().__init__(message)
        self.exit_code = exit_code
        self.stderr = stderr


class StepperNoOutput(WxError):
    pass


class StepperContractViolation(WxError):
    pass


class StepperTimeout(WxError):
    pass


# rollout / trajectories
class TrajectoryGap(WxError):
    pass


class ManifestMismatch(WxError):
    pass


# cyclone tracking
class EmptySearchRegion(WxError):
    pass


class TrackLost(WxError):
    def __init__(self, step_index: int, detail: str = ""):
        self.step_index = step_index
        msg = f"cyclone track lost at step {step_index}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class TrackTimeMismatch(WxError):
    pass


class DegenerateVortex(WxError):
    pass


# verification
class TimeMismatch(WxError):
    pass


class SchemaMismatch(WxError):
    pass


class TrajectoryMismatch(WxError):
    pass


class DegenerateWeights(WxError):
    pass


# rendering / regions
class EmptyRegion(WxError):
    pass
