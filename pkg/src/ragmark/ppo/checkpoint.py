"""RGMK1 checkpoint format.

Layout: magic bytes ``RGMK1``, a little-endian uint32 header length, a
UTF-8 JSON header (env id, dims, config echo, asset fingerprints, and
the declared array table), then the raw arrays in declared order.
Network weights are little-endian float32; the normalizer statistics
are declared float64 so that save -> load -> evaluate reproduces results
bit-for-bit (the regression this format exists to prevent).
"""

from __future__ import annotations

import json
import struct
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..errors import CheckpointError
from .config import TrainerConfig, config_from_mapping
from .nets import PolicyValueNet, load_state_arrays, state_dict_arrays
from .normalizer import IdentityNormalizer, RunningNormalizer

MAGIC = b"RGMK1"
FORMAT_VERSION = 1


@dataclass
class PolicyParams:
    net: PolicyValueNet
    normalizer: RunningNormalizer
    env_id: str
    obs_dim: int
    act_dim: int
    config: TrainerConfig
    wrappers: list[str] = field(default_factory=list)

    @classmethod
    def fresh(cls, env_id: str, obs_dim: int, act_dim: int,
              config: TrainerConfig) -> "PolicyParams":
        torch.manual_seed(config.seed)
        net = PolicyValueNet(obs_dim, act_dim, config.num_layers, config.hidden_units)
        norm_cls = RunningNormalizer if config.normalize else IdentityNormalizer
        return cls(net=net, normalizer=norm_cls(obs_dim), env_id=env_id,
                   obs_dim=obs_dim, act_dim=act_dim, config=config)


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent, capture_output=True,
            text=True, timeout=5)
        if out.returncode == 0:
            return out.stdout.strip()
    except (OSError, subprocess.TimeoutExpired):
        pass
    return "unversioned"


def _asset_fingerprints(env_id: str) -> dict[str, str]:
    from ..assets import asset_sha256, list_assets
    try:
        if env_id in list_assets():
            return {env_id: asset_sha256(env_id)}
    except Exception:
        pass
    return {}


def save_checkpoint(params: PolicyParams, path: str | Path) -> None:
    """Atomic write: header + arrays to a temp file, then rename."""
    path = Path(path)
    arrays: dict[str, np.ndarray] = {}
    arrays.update(state_dict_arrays(params.net))
    for k, v in params.normalizer.state().items():
        arrays[k] = np.asarray(v, dtype="<f8")

    header = {
        "format_version": FORMAT_VERSION,
        "env_id": params.env_id,
        "obs_dim": params.obs_dim,
        "act_dim": params.act_dim,
        "config": params.config.to_dict(),
        "normalize": params.config.normalize,
        "wrappers": params.wrappers,
        "arrays": [[k, list(v.shape), v.dtype.str] for k, v in arrays.items()],
        "assets": _asset_fingerprints(params.env_id),
        "code_version": _git_describe(),
        "created_unix": time.time(),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, v in arrays.items():
            fh.write(np.ascontiguousarray(v).tobytes())
    tmp.replace(path)


def load_checkpoint(path: str | Path) -> PolicyParams:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if raw[:5] != MAGIC:
        raise CheckpointError(f"{path} is not an RGMK1 checkpoint")
    (hlen,) = struct.unpack("<I", raw[5:9])
    try:
        header = json.loads(raw[9:9 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported format version {header.get('format_version')}")

    offset = 9 + hlen
    arrays: dict[str, np.ndarray] = {}
    for name, shape, dtype in header["arrays"]:
        dt = np.dtype(dtype)
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * dt.itemsize
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated array {name!r}")
        arrays[name] = np.frombuffer(
            raw, dtype=dt, count=count, offset=offset).reshape(shape).copy()
        offset += nbytes

    config = config_from_mapping(header["config"], source=str(path))
    params = PolicyParams.fresh(header["env_id"], header["obs_dim"],
                                header["act_dim"], config)
    net_arrays = {k: v for k, v in arrays.items() if not k.startswith("normalizer_")}
    try:
        load_state_arrays(params.net, net_arrays)
    except (KeyError, RuntimeError) as exc:
        raise CheckpointError(f"{path}: weight table mismatch: {exc}") from exc
    norm_state = {k: v for k, v in arrays.items() if k.startswith("normalizer_")}
    norm_cls = RunningNormalizer if header.get("normalize", True) else IdentityNormalizer
    params.normalizer = norm_cls.from_state(norm_state)
    params.wrappers = list(header.get("wrappers", []))
    return params
