import numpy as np
import pytest

from floodca import synth
from floodca._kernels import warmup
from floodca.engine import MassLedger, SimConfig, initialize


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    """Load (or build) the numba kernel cache once, before any timed test."""
    warmup()


def seed_depth(state, ledger: MassLedger, terrain, depth: np.ndarray) -> None:
    """Install an initial depth field, charging it to the ledger as inflow."""
    state.depth[:] = np.where(terrain.valid_mask, depth, 0.0)
    ledger.volume_in = float(state.depth[state.valid].sum()) * terrain.cell_area
    ledger.refresh(ledger.volume_in)


def quiet_config(dt=0.1, steps=10, **kwargs) -> SimConfig:
    """Config for closed-domain runs: no inlets, rule off unless overridden."""
    return SimConfig(dt=dt, duration=dt * steps, snapshot_interval=dt * steps, **kwargs)


@pytest.fixture
def bowl21():
    return synth.bowl(21, rim=2.0)


@pytest.fixture
def flat6():
    return synth.flat(6, 6)
