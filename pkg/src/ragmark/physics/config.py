"""Timestep, gravity and solver settings."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidValue


@dataclass(frozen=True)
class PhysicsConfig:
    """Simulation parameters; y is up, gravity pulls along -y.

    Physics rates sit in the 200-500 Hz band: the planar agents run at
    250 Hz and the 3D agents at 500 Hz by default (per-environment
    override).
    """

    dt: float = 1.0 / 250.0
    gravity: tuple[float, float, float] = (0.0, -9.81, 0.0)
    solver_iterations: int = 10
    baumgarte_beta: float = 0.2
    friction_default: float = 1.0
    contact_slop: float = 1e-3
    warm_start: bool = True

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise InvalidValue(f"dt must be > 0, got {self.dt}")
        if self.solver_iterations < 1:
            raise InvalidValue("solver_iterations must be >= 1")
        if not (0.0 <= self.baumgarte_beta <= 1.0):
            raise InvalidValue("baumgarte_beta must be in [0, 1]")
