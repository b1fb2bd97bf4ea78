"""Exception taxonomy shared across the suite.

Every error carries a stable machine-readable ``code`` so the CLI and the
wire protocol can report failures in one line without string matching on
messages.
"""

from __future__ import annotations


class RagmarkError(Exception):
    """Base class; ``code`` is stable across releases."""

    code = "error"

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message

    def oneline(self) -> str:
        return f"{self.code}: {self.message}"


# --- model parsing ---------------------------------------------------------

class MalformedXml(RagmarkError):
    code = "malformed_xml"


class UnknownTag(RagmarkError):
    code = "unknown_tag"


class InvalidValue(RagmarkError):
    code = "invalid_value"


class CycleDetected(RagmarkError):
    code = "cycle_detected"


class MissingLabel(RagmarkError):
    code = "missing_label"

    def __init__(self, tag: str):
        super().__init__(f"no body carries required label {tag!r}")
        self.tag = tag


# --- physics ----------------------------------------------------------------

class SpawnPenetration(RagmarkError):
    code = "spawn_penetration"


class RangeViolation(RagmarkError):
    code = "range_violation"


class NonFiniteState(RagmarkError):
    code = "non_finite_state"


# --- environments / batching -----------------------------------------------

class NonFiniteObservation(RagmarkError):
    code = "non_finite_observation"


class NonFiniteAction(RagmarkError):
    code = "non_finite_action"


class ShapeMismatch(RagmarkError):
    code = "shape_mismatch"


# --- trainer ----------------------------------------------------------------

class LengthMismatch(RagmarkError):
    code = "length_mismatch"


class NonFiniteLoss(RagmarkError):
    code = "non_finite_loss"


class EmptyEvaluation(RagmarkError):
    code = "empty_evaluation"


class ConfigError(RagmarkError):
    code = "config_error"


class CheckpointError(RagmarkError):
    code = "checkpoint_error"


# --- task wrappers ----------------------------------------------------------

class EmptyMotion(RagmarkError):
    code = "empty_motion"


class DimensionMismatch(RagmarkError):
    code = "dimension_mismatch"
