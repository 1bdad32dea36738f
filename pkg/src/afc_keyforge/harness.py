"""Monte Carlo success-rate sweeps.

Each trial draws distinct primes for the nodes, realizes the channel, runs a
protocol round and checks whether the noisy key norm still factors into the
true primes within the tolerance window.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from typing import Optional, Sequence

import numpy as np

from .channel import Geometry, RicianParams, realize
from .factorint import FactorPolicy, factor, noisy_factor_search
from .gaussint import PrimePool, generate_pool
from .protocol import NodeState, run_round

SWEEP_PARAMS = ("sigma_h", "distance_m", "tolerance")
SCOPES = ("all_nodes", "any_node", "node_0")
DEFAULT_SIGMA_H = tuple(round(0.01 * k, 2) for k in range(1, 11))


@dataclass(frozen=True)
class SimulationConfig:
    """All simulation inputs.

    ``sigma_h``, ``distance_m`` and ``tolerance`` are tuples; at most one of
    them may hold more than one value, and that one is the swept parameter.
    """

    trials: int = 20000
    node_count: int = 2
    sigma_n: float = 0.01
    sigma_h: tuple[float, ...] = DEFAULT_SIGMA_H
    distance_m: tuple[float, ...] = (15.0,)
    k_factors: tuple[float, ...] = (0.0, 3.0, 20.0)
    tolerance: tuple[int, ...] = (1500,)
    carrier_hz: float = 2.4e9
    pool_min: int = 5
    pool_max: int = 61
    pathloss_mode: str = "normalized"
    policy: FactorPolicy = field(default_factory=FactorPolicy)
    success_scope: str = "all_nodes"
    master_seed: int = 0

    def __post_init__(self):
        for name in SWEEP_PARAMS + ("k_factors",):
            v = getattr(self, name)
            if not isinstance(v, tuple):
                object.__setattr__(self, name, tuple(v) if isinstance(v, (list, range)) else (v,))

    def validate(self) -> "SimulationConfig":
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.node_count < 2:
            raise ValueError("node_count must be at least 2")
        if self.sigma_n < 0 or any(s < 0 for s in self.sigma_h):
            raise ValueError("noise and estimation-error deviations must be non-negative")
        if any(d <= 0 for d in self.distance_m):
            raise ValueError("distances must be positive")
        if any(t < 0 for t in self.tolerance):
            raise ValueError("tolerance must be non-negative")
        if not self.k_factors or any(not k >= 0 for k in self.k_factors):
            raise ValueError("k_factors must be a non-empty list of non-negative values")
        if not self.sigma_h or not self.distance_m or not self.tolerance:
            raise ValueError("sweep parameters cannot be empty")
        swept = [p for p in SWEEP_PARAMS if len(getattr(self, p)) > 1]
        if len(swept) > 1:
            raise ValueError(f"only one parameter may be swept, got {', '.join(swept)}")
        if self.pathloss_mode not in ("physical", "normalized"):
            raise ValueError(f"unknown path-loss mode {self.pathloss_mode!r}")
        if self.success_scope not in SCOPES:
            raise ValueError(f"unknown success scope {self.success_scope!r}")
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        self.pool.check_capacity(self.node_count)
        return self

    @property
    def sweep_param(self) -> str:
        for p in SWEEP_PARAMS:
            if len(getattr(self, p)) > 1:
                return p
        return "sigma_h"

    @property
    def sweep_values(self) -> tuple:
        return getattr(self, self.sweep_param)

    @property
    def pool(self) -> PrimePool:
        return _pool(self.pool_min, self.pool_max)

    def point(self, sweep_index: int) -> dict:
        """Scalar sigma_h / distance_m / tolerance at one sweep coordinate."""
        out = {p: getattr(self, p)[0] for p in SWEEP_PARAMS}
        out[self.sweep_param] = self.sweep_values[sweep_index]
        return out


@lru_cache(maxsize=32)
def _pool(lo: int, hi: int) -> PrimePool:
    return generate_pool(lo, hi)


@dataclass(frozen=True)
class SweepPointResult:
    sweep_value: float
    k_factor: float
    successes: int
    trials: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @property
    def ci95_halfwidth(self) -> float:
        r = self.success_rate
        return 1.96 * math.sqrt(r * (1 - r) / self.trials)


def trial_rng(config: SimulationConfig, trial_index: int, k_index: int = 0, sweep_index: int = 0) -> np.random.Generator:
    """Independent stream for one trial.

    Tolerance and factor policy do not touch the channel, so a tolerance sweep
    reuses the same stream at every tolerance value.
    """
    channel_index = sweep_index if config.sweep_param != "tolerance" else 0
    return np.random.default_rng([config.master_seed, k_index, channel_index, trial_index])


def run_trial(config: SimulationConfig, trial_index: int, k_index: int = 0, sweep_index: int = 0) -> tuple[bool, ...]:
    """Per-node success flags for one trial; a pure function of its arguments."""
    rng = trial_rng(config, trial_index, k_index, sweep_index)
    point = config.point(sweep_index)
    pool = config.pool
    picks = rng.choice(len(pool), size=config.node_count, replace=False)
    nodes = [NodeState(i, pool.members[int(p)]) for i, p in enumerate(picks)]
    geom = _geometry(config.node_count, point["distance_m"], config.carrier_hz)
    realization = realize(
        geom, RicianParams(config.k_factors[k_index]), point["sigma_h"], rng, config.pathloss_mode
    )
    outcome = run_round(nodes, realization, config.sigma_n, rng)
    truth = factor(outcome.true_norm)  # ground truth, independent of the policy under test
    flags = []
    for key, noisy in zip(outcome.recovered_key, outcome.noisy_norm):
        if key is None:
            flags.append(False)
            continue
        ok, _ = noisy_factor_search(noisy, truth, point["tolerance"], config.policy)
        flags.append(ok)
    return tuple(flags)


@lru_cache(maxsize=64)
def _geometry(node_count: int, distance_m: float, carrier_hz: float) -> Geometry:
    return Geometry.equidistant(node_count, distance_m, carrier_hz)


def scoped_success(flags: Sequence[bool], scope: str) -> bool:
    if scope == "all_nodes":
        return all(flags)
    if scope == "any_node":
        return any(flags)
    return bool(flags[0])


def _cell_chunk(config: SimulationConfig, k_index: int, sweep_index: int, start: int, stop: int) -> bytes:
    return bytes(
        scoped_success(run_trial(config, t, k_index, sweep_index), config.success_scope)
        for t in range(start, stop)
    )


def _chunks(trials: int, workers: int) -> list[tuple[int, int]]:
    size = max(1, math.ceil(trials / (4 * workers)))
    return [(s, min(s + size, trials)) for s in range(0, trials, size)]


def _cells(config: SimulationConfig) -> list[tuple[int, int]]:
    """(sweep_index, k_index) pairs ordered by (sweep value, K)."""
    cells = [(s, k) for s in range(len(config.sweep_values)) for k in range(len(config.k_factors))]
    return sorted(cells, key=lambda c: (config.sweep_values[c[0]], config.k_factors[c[1]]))


def cell_flags(
    config: SimulationConfig,
    k_index: int = 0,
    sweep_index: int = 0,
    workers: int = 1,
    executor: Optional[ProcessPoolExecutor] = None,
) -> np.ndarray:
    """Scoped per-trial success flags for one sweep cell, in trial order."""
    config.validate()
    chunks = _chunks(config.trials, workers)
    if executor is None and workers <= 1:
        parts = [_cell_chunk(config, k_index, sweep_index, a, b) for a, b in chunks]
    elif executor is not None:
        parts = list(executor.map(_cell_chunk, *zip(*[(config, k_index, sweep_index, a, b) for a, b in chunks])))
    else:
        with ProcessPoolExecutor(workers) as ex:
            return cell_flags(config, k_index, sweep_index, workers, ex)
    return np.frombuffer(b"".join(parts), dtype=np.uint8).astype(bool)


def run_sweep(config: SimulationConfig, workers: int = 1, progress=None) -> list[SweepPointResult]:
    """Aggregate ``config.trials`` trials at every (sweep value, K) cell.

    Results do not depend on ``workers``: each trial owns its random stream
    and counts are summed per cell.
    """
    config.validate()
    cells = _cells(config)
    results = []
    executor = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for n, (s, k) in enumerate(cells, 1):
            flags = cell_flags(config, k, s, workers, executor)
            results.append(
                SweepPointResult(config.sweep_values[s], config.k_factors[k], int(flags.sum()), config.trials)
            )
            if progress is not None:
                progress(n, len(cells), results[-1])
    finally:
        if executor is not None:
            executor.shutdown()
    return results


def plateau_oracle(pool: PrimePool, node_count: int, tolerance: int) -> float:
    """Success probability once the received signal carries no information.

    The recovered key then collapses to the receiver's own prime, so success
    means ``|norm(own) - product of norms| <= tolerance``. Enumerates every
    ordered draw of distinct primes with node 0 as the receiver.
    """
    if len(pool) == 0 or node_count < 2:
        raise ValueError("need a non-empty pool and at least two nodes")
    hits = total = 0
    for draw in permutations(pool.norms, node_count):
        total += 1
        hits += abs(draw[0] - math.prod(draw)) <= tolerance
    return hits / total
