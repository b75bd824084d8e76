"""Shared exception types."""


class RewardNetError(Exception):
    """Base class for all package errors."""

    code = "error"


class InvalidConfig(RewardNetError):
    code = "invalid_config"


class UnsatisfiableConfig(RewardNetError):
    code = "unsatisfiable_config"


class IllegalMove(RewardNetError):
    code = "illegal_move"


class EpisodeOver(RewardNetError):
    code = "episode_over"


class TrajectoryMismatch(RewardNetError):
    code = "trajectory_mismatch"


class EmptyBuffer(RewardNetError):
    code = "empty_buffer"


class PoolExhausted(RewardNetError):
    code = "pool_exhausted"


class GenerationIncomplete(RewardNetError):
    code = "generation_incomplete"


class IncompleteTrajectory(RewardNetError):
    code = "incomplete_trajectory"


class PhaseViolation(RewardNetError):
    code = "phase_violation"


class IncompleteRun(RewardNetError):
    code = "incomplete_run"


class IoFailure(RewardNetError):
    code = "io_failure"
