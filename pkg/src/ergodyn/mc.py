"""Trajectory sampling and statistical cross-checks of the operator algebra.

The chain x_{t+1} ~ row x_t of the kernel is simulated with inverse-CDF
draws on the sparse rows. Randomness comes from splitmix64 streams: a
trajectory with seed s is fully determined by s, and batch estimates derive
per-trajectory seeds as master_seed xor trajectory_index, so results are
reproducible bit for bit regardless of scheduling or backend.

estimate_Lj_phi approximates the j-step conditional expectation of an
observable, i.e. the j-fold averaged observable evaluated at the start
state, and should match the matrix computation within sampling error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DimensionError, InvalidArgumentError
from .kernel import TransitionKernel
from .space import Observable

GENERATOR_NAME = _backend.GENERATOR_NAME


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A sampled path: states[0] == start_state, one entry per step after."""

    start_state: int
    states: np.ndarray
    seed: int

    def __post_init__(self):
        states = np.ascontiguousarray(self.states, dtype=np.int64)
        if states.ndim != 1 or states.size < 1 or states[0] != self.start_state:
            raise InvalidArgumentError("trajectory must start at its start state")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error."""

    mean: float
    stderr: float
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 1:
            raise InvalidArgumentError("n_samples must be positive")
        if not self.stderr >= 0.0:
            raise InvalidArgumentError("stderr must be nonnegative")


def _check_start(P: TransitionKernel, start: int) -> int:
    start = int(start)
    if not (0 <= start < P.K):
        raise InvalidArgumentError(f"start state {start} outside [0, {P.K})")
    return start


def sample_trajectory(P: TransitionKernel, start: int, n: int, seed: int) -> Trajectory:
    """Simulate n steps from a start state; deterministic in the seed."""
    start = _check_start(P, start)
    if n < 0:
        raise InvalidArgumentError("step count must be nonnegative")
    indptr, indices, cumdata = P.csr_with_cum()
    states = _backend.sample_path(
        indptr, indices, cumdata, start, int(n), np.uint64(int(seed) & ((1 << 64) - 1))
    )
    return Trajectory(start, states, int(seed))


def estimate_Lj_phi(
    P: TransitionKernel,
    phi: Observable,
    start: int,
    j: int,
    n_samples: int,
    seed: int,
) -> Estimate:
    """Monte Carlo estimate of the j-step averaged observable at a state.

    Averages phi(x_j) over n_samples independent trajectories started at
    ``start``; trajectory i uses the stream seeded by seed xor i. The mean
    is accumulated with compensated summation, so it is independent of
    aggregation order.
    """
    if phi.partition != P.partition:
        raise DimensionError("observable and kernel live on different partitions")
    start = _check_start(P, start)
    if j < 0:
        raise InvalidArgumentError("j must be nonnegative")
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be positive")
    ends = _backend.sample_endpoints(P, start, int(j), int(seed), int(n_samples))
    vals = phi.values[ends]
    mean = math.fsum(vals) / n_samples
    if n_samples == 1:
        stderr = 0.0
    else:
        var = math.fsum((v - mean) ** 2 for v in vals) / (n_samples - 1)
        stderr = math.sqrt(var / n_samples)
    return Estimate(mean, stderr, n_samples)


def empirical_time_average(traj: Trajectory, phi: Observable) -> float:
    """Average of the observable along a sampled path."""
    if traj.states.max(initial=0) >= phi.values.size or traj.states.min(initial=0) < 0:
        raise DimensionError("trajectory states exceed the observable's cells")
    return math.fsum(phi.values[traj.states]) / traj.states.size
