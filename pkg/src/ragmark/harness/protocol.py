"""Wire protocol: newline-delimited JSON messages.

Client commands carry a ``cmd`` field (hello, reset, step, goal, close);
server replies carry ``type`` (spec, obs, transition, frame, error).
Error codes are fixed: bad_json (unparseable line or no valid command),
bad_shape (well-formed command with invalid payload), bad_state (valid
command in the wrong session state), unknown_env.
"""

from __future__ import annotations

import json
import math
from typing import Literal, Union

from pydantic import BaseModel, Field, ValidationError

PROTOCOL_VERSION = 1

ERR_BAD_JSON = "bad_json"
ERR_BAD_SHAPE = "bad_shape"
ERR_BAD_STATE = "bad_state"
ERR_UNKNOWN_ENV = "unknown_env"


class HelloCmd(BaseModel):
    cmd: Literal["hello"]
    env: str
    agents: int = 16
    seed: int = 0
    wrappers: list[str] = Field(default_factory=list)
    decision_frequency: int = 5
    version: int = PROTOCOL_VERSION


class ResetCmd(BaseModel):
    cmd: Literal["reset"]
    seed: int | None = None


class StepCmd(BaseModel):
    cmd: Literal["step"]
    actions: list[list[float]]


class GoalCmd(BaseModel):
    cmd: Literal["goal"]
    value: Union[str, float]


class CloseCmd(BaseModel):
    cmd: Literal["close"]


Command = Union[HelloCmd, ResetCmd, StepCmd, GoalCmd, CloseCmd]
_COMMANDS = {"hello": HelloCmd, "reset": ResetCmd, "step": StepCmd,
             "goal": GoalCmd, "close": CloseCmd}


class ProtocolError(Exception):
    def __init__(self, code: str, msg: str):
        super().__init__(msg)
        self.code = code
        self.msg = msg

    def reply(self) -> dict:
        return {"type": "error", "code": self.code, "msg": self.msg}


def parse_command(line: str | bytes) -> Command:
    """One line -> one command; raises ProtocolError on malformed input."""
    try:
        data = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProtocolError(ERR_BAD_JSON, f"unparseable line: {exc}") from exc
    if not isinstance(data, dict):
        raise ProtocolError(ERR_BAD_JSON, "expected a JSON object")
    cmd = data.get("cmd")
    model = _COMMANDS.get(cmd)
    if model is None:
        raise ProtocolError(ERR_BAD_JSON, f"unknown or missing cmd {cmd!r}")
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ProtocolError(ERR_BAD_SHAPE, f"{cmd}: {exc.errors()[0]['msg']}") from exc


def encode(message: dict) -> bytes:
    """One message -> one line; raises on non-finite numbers so replies
    always parse on the far side."""
    text = json.dumps(message, allow_nan=False, separators=(",", ":"))
    return text.encode("utf-8") + b"\n"


def spec_reply(obs_dim: int, act_dim: int, agents: int, **extra) -> dict:
    return {"type": "spec", "obs_dim": obs_dim, "act_dim": act_dim,
            "agents": agents, **extra}


def obs_reply(obs) -> dict:
    return {"type": "obs", "obs": _rows(obs)}


def transition_reply(obs, rew, status, reset) -> dict:
    return {"type": "transition", "obs": _rows(obs),
            "rew": [_num(v) for v in rew],
            "status": list(status), "reset": [bool(b) for b in reset]}


def frame_msg(t: float, bodies: list[dict], hud: dict) -> dict:
    return {"type": "frame", "t": _num(t), "bodies": bodies, "hud": hud}


def _num(v) -> float:
    f = float(v)
    if not math.isfinite(f):
        raise ValueError(f"non-finite value in reply: {v!r}")
    return f


def _rows(matrix) -> list[list[float]]:
    return [[_num(v) for v in row] for row in matrix]
