"""Exception hierarchy shared across the package.

Every error raised by duomod derives from DuomodError so callers can catch
one base type at API boundaries (CLI, service).
"""


class DuomodError(Exception):
    """Base class for all duomod errors."""


# -- geometry ---------------------------------------------------------------

class AngleAtPi(DuomodError):
    """Rotation angle within tolerance of pi; the logarithm is not unique."""


class DimensionMismatch(DuomodError):
    """Vector/matrix dimensions inconsistent with the embodiment or schedule."""


# -- diffusion --------------------------------------------------------------

class BadStepCount(DuomodError):
    """Requested diffusion step count is invalid (T < 2)."""


class ShapeMismatch(DuomodError):
    """Array arguments do not share the required shape."""


# -- models / training ------------------------------------------------------

class BatchTooSmall(DuomodError):
    """Batch has fewer elements than the operation requires."""


class TooShort(DuomodError):
    """Motion has too few waypoints for the requested statistic."""


class EmptyDataset(DuomodError):
    """Training requested on an empty dataset."""


class NonFiniteLoss(DuomodError):
    """Training loss became NaN/Inf; aborted with diagnostics."""


class CheckpointError(DuomodError):
    """Model checkpoint file is malformed, corrupt, or version-incompatible."""


# -- dataset generation -----------------------------------------------------

class GridTooLarge(DuomodError):
    """Voxel grid would exceed the hard voxel-count guard."""


class IKDivergence(DuomodError):
    """Inverse kinematics failed to converge for a probe pose."""


class InsufficientReachableVoxels(DuomodError):
    """Fewer reachable voxels than requested initial poses."""


class YieldTooLow(DuomodError):
    """Dataset generation accepted fewer than the minimum fraction of attempts."""


class UnknownTask(DuomodError):
    """Task name not registered with the simulator."""


class DatasetFormatError(DuomodError):
    """Dataset container is malformed, corrupt, or version-incompatible."""


# -- reward DSL -------------------------------------------------------------

class RewardSyntaxError(DuomodError):
    """Reward source failed to parse; carries line and column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class UnknownIdentifier(DuomodError):
    """Reward references a name absent from the scene schema."""


class RewardTypeError(DuomodError):
    """Reward expression is ill-typed."""


class UnboundScene(DuomodError):
    """Reward evaluated without binding to a scene."""


# -- reasoning --------------------------------------------------------------

class ReasonerUnavailable(DuomodError):
    """The configured reasoning endpoint could not be reached."""


class UnparseableAfterRetries(DuomodError):
    """The reasoner never produced a parseable objective within the retry budget."""


class InvalidCategory(DuomodError):
    """Reasoner emitted a coordination category outside the taxonomy."""


class HistoryRequired(DuomodError):
    """Reflection prompt requested without a prior reasoning round."""


# -- modulation -------------------------------------------------------------

class NonFiniteScore(DuomodError):
    """A proposal reward is NaN/Inf; selection cannot proceed."""


class BadDepth(DuomodError):
    """Truncation depth outside [1, sampling steps]."""


class MissingReference(DuomodError):
    """Coordinated category requested without a reference relative pose."""


class NonFiniteState(DuomodError):
    """Sampler state became NaN/Inf; carries step-level diagnostics."""


# -- simenv -----------------------------------------------------------------

class SchemaError(DuomodError):
    """Scene or embodiment descriptor violates its schema; carries field path."""


class IKFailure(DuomodError):
    """Execution could not realize a waypoint; carries the waypoint index."""

    def __init__(self, waypoint: int, message: str = ""):
        super().__init__(f"IK failed at waypoint {waypoint}" + (f": {message}" if message else ""))
        self.waypoint = waypoint


# -- metrics / experiments ---------------------------------------------------

class TooFew(DuomodError):
    """Metric requested on fewer samples than it is defined for."""


class DegenerateCovariance(DuomodError):
    """Covariance fit is singular (regularized internally; raised only if unrecoverable)."""


class MissingModel(DuomodError):
    """Experiment runner invoked without the required trained models."""


# -- service ----------------------------------------------------------------

class UnknownSession(DuomodError):
    """No session with the given id."""


class IllegalTransition(DuomodError):
    """Requested a session action not legal in the current state."""

    def __init__(self, current: str, requested: str):
        super().__init__(f"cannot {requested} while {current}")
        self.current = current
        self.requested = requested
