"""Generalized advantage estimation over status-marked streams."""

from __future__ import annotations

import numpy as np

from ..errors import LengthMismatch

RUNNING = 0
TERMINATED = 1
TRUNCATED = 2

STATUS_CODES = {"running": RUNNING, "terminated": TERMINATED, "truncated": TRUNCATED}


def compute_gae(rewards, values, statuses, gamma: float, lam: float,
                bootstrap_value: float, truncated_values=None):
    """Advantages and returns for one agent's stream.

    statuses mark each step's outcome: the lambda-chain and the value
    bootstrap break at episode boundaries.  Terminated steps bootstrap
    zero; truncated steps bootstrap the value estimate of the state the
    episode was cut at (``truncated_values``, aligned with the stream).
    The stream's final step, when still running, bootstraps
    ``bootstrap_value``.  Returns are computed against raw advantages;
    buffer-level standardization happens in the update.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    status = _encode(statuses)
    T = len(rewards)
    if len(values) != T or len(status) != T:
        raise LengthMismatch(
            f"rewards {T}, values {len(values)}, statuses {len(status)}")
    if truncated_values is not None and len(truncated_values) != T:
        raise LengthMismatch("truncated_values length mismatch")
    if np.any(status == TRUNCATED) and truncated_values is None:
        raise LengthMismatch("truncated steps need truncated_values")

    adv = np.zeros(T)
    adv_next = 0.0
    for t in range(T - 1, -1, -1):
        if status[t] == TERMINATED:
            next_v = 0.0
            chain = 0.0
        elif status[t] == TRUNCATED:
            next_v = float(truncated_values[t])
            chain = 0.0
        else:
            next_v = float(values[t + 1]) if t + 1 < T else float(bootstrap_value)
            chain = 1.0
        delta = rewards[t] + gamma * next_v - values[t]
        adv[t] = delta + gamma * lam * chain * adv_next
        adv_next = adv[t]
    return adv, adv + values


def _encode(statuses) -> np.ndarray:
    arr = np.asarray(statuses)
    if arr.dtype.kind in ("i", "u"):
        return arr.astype(np.int64)
    return np.array([STATUS_CODES[s] for s in statuses], dtype=np.int64)


def standardize(adv: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    return (adv - adv.mean()) / (adv.std() + eps)
