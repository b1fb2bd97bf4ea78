import numpy as np
import pytest

from ragmark.envs import make_env
from ragmark.mjcf import parse_model
from ragmark.physics import PhysicsConfig, Terrain, compile_model, init_scene, step_physics

# minimal model used to warm the numba kernels once per session
_WARMUP = """
<mujoco model="warmup">
  <worldbody>
    <body name="ball" pos="0 1 0">
      <inertial mass="1.0" diaginertia="0.01 0.01 0.01"/>
      <geom type="sphere" size="0.1"/>
    </body>
  </worldbody>
</mujoco>
"""


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load the disk-cached) physics kernels before timing
    anything."""
    cm = compile_model(parse_model(_WARMUP))
    st = init_scene(cm, Terrain(), PhysicsConfig())
    step_physics(st, np.zeros(0))


@pytest.fixture(scope="session")
def hopper_spec():
    return make_env("hopper")


@pytest.fixture(scope="session")
def walker_spec():
    return make_env("walker2d")


@pytest.fixture(scope="session")
def humanoid_spec():
    return make_env("humanoid")


@pytest.fixture(scope="session")
def ant_spec():
    return make_env("ant")
