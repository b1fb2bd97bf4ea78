"""Shipped model files and asset resolution.

``RAGMARK_ASSETS`` overrides the asset directory; otherwise the files
packaged next to this module are used.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

from ..errors import ConfigError
from ..mjcf import ArticulatedModel, parse_model

ASSET_ENV_VAR = "RAGMARK_ASSETS"


def asset_dir() -> Path:
    override = os.environ.get(ASSET_ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).resolve().parent


def asset_path(name: str) -> Path:
    if not name.endswith(".xml"):
        name += ".xml"
    path = asset_dir() / name
    if not path.is_file():
        raise ConfigError(f"asset {name!r} not found in {asset_dir()}")
    return path


def list_assets() -> list[str]:
    return sorted(p.stem for p in asset_dir().glob("*.xml"))


def load_asset(name: str) -> ArticulatedModel:
    return parse_model(asset_path(name).read_text(encoding="utf-8"))


def asset_sha256(name: str) -> str:
    return hashlib.sha256(asset_path(name).read_bytes()).hexdigest()
