"""Monte Carlo engine for controlled branching processes.

Replications are simulated in fixed-size blocks.  Block ``b`` draws from
``SeedSequence(master_seed, spawn_key=(b,))`` and evolves all of its paths
together, so a report depends only on ``(model, horizon, replications,
master_seed, block_size)`` and never on how blocks are spread over workers.

Paths whose size exceeds ``pop_cap`` are marked exploded (stored as ``-1``)
and stop evolving; they are counted as surviving.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .model import ModelSpec

DEFAULT_POP_CAP = 10**12
DEFAULT_BLOCK = 1024
EXPLODED = -1


def _rng(rng_state) -> np.random.Generator:
    if isinstance(rng_state, np.random.Generator):
        return rng_state
    return np.random.default_rng(rng_state)


def _advance(model: ModelSpec, n: int, z: np.ndarray, rng: np.random.Generator):
    t = model.control.sample(z, rng)
    return t, model.offspring.law(n).sum_sample(t, rng)


def simulate_step(model: ModelSpec, n: int, z: int, rng_state, pop_cap: int = DEFAULT_POP_CAP):
    """One generation from ``Z_n = z``: returns ``(t, z_next, exploded)``."""
    if z < 0:
        raise ValueError("population size must be >= 0")
    rng = _rng(rng_state)
    t, z_next = _advance(model, n, np.array([z], dtype=np.int64), rng)
    z_next = int(z_next[0])
    return int(t[0]), z_next, z_next > pop_cap


@dataclass(frozen=True)
class Trajectory:
    """One sampled path.  ``z[n] == -1`` marks generations after an explosion."""

    z: tuple[int, ...]
    t: tuple[int, ...]
    exploded_at: int | None = None

    @property
    def exploded(self) -> bool:
        return self.exploded_at is not None


def simulate_path(model: ModelSpec, horizon: int, rng_state, pop_cap: int = DEFAULT_POP_CAP) -> Trajectory:
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    rng = _rng(rng_state)
    z = [model.initial]
    t = []
    exploded_at = None
    for n in range(horizon):
        if exploded_at is not None:
            z.append(EXPLODED)
            t.append(EXPLODED)
            continue
        tn, zn, boom = simulate_step(model, n, z[-1], rng, pop_cap)
        t.append(tn)
        if boom:
            exploded_at = n + 1
            z.append(EXPLODED)
        else:
            z.append(zn)
    return Trajectory(tuple(z), tuple(t), exploded_at)


@dataclass
class BlockResult:
    extinct: np.ndarray
    exploded: np.ndarray
    mid_band: np.ndarray
    sum_z: np.ndarray
    sum_z2: np.ndarray
    sum_z4: np.ndarray
    final_z: np.ndarray


def simulate_block(model: ModelSpec, horizon: int, size: int, seed_seq: np.random.SeedSequence,
                   band: int = 20, pop_cap: int = DEFAULT_POP_CAP) -> BlockResult:
    rng = np.random.default_rng(seed_seq)
    z = np.full(size, model.initial, dtype=np.int64)
    H = horizon + 1
    out = BlockResult(np.zeros(H, np.int64), np.zeros(H, np.int64), np.zeros(H, np.int64),
                      np.zeros(H), np.zeros(H), np.zeros(H), z)

    def record(n):
        live = z >= 0
        zl = z[live].astype(float)
        out.extinct[n] = np.count_nonzero(z == 0)
        out.exploded[n] = np.count_nonzero(~live)
        out.mid_band[n] = np.count_nonzero((z > 0) & (z <= band))
        out.sum_z[n] = zl.sum()
        out.sum_z2[n] = np.dot(zl, zl)
        out.sum_z4[n] = np.dot(zl * zl, zl * zl)

    record(0)
    absorbing = model.control.zero_absorbing()
    for n in range(horizon):
        active = (z > 0) if absorbing else (z >= 0)
        if np.any(active):
            _, zn = _advance(model, n, z[active], rng)
            zn[zn > pop_cap] = EXPLODED
            z[active] = zn
        record(n + 1)
    out.final_z = z
    return out


def _run_block(args):
    model, horizon, size, master_seed, index, band, pop_cap = args
    seq = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return simulate_block(model, horizon, size, seq, band, pop_cap)


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class MCReport:
    replications: int
    horizon: int
    band: int
    master_seed: int
    extinct_by_gen: list[float]
    exploded_by_gen: list[float]
    mid_band_by_gen: list[float]
    mean_z: list[float]
    var_z: list[float]
    mean_z2: list[float]
    var_z2: list[float]
    survival_at_horizon: float
    survival_ci: tuple[float, float]
    final_z: np.ndarray = field(repr=False)
    w_samples_at_horizon: list[float] | None = field(default=None, repr=False)

    @property
    def mid_band_freq(self) -> float:
        return self.mid_band_by_gen[-1]

    @property
    def survival_se(self) -> float:
        p = self.survival_at_horizon
        return math.sqrt(p * (1 - p) / self.replications)

    def to_dict(self) -> dict:
        def clean(xs):
            return [None if (x is None or not math.isfinite(x)) else x for x in xs]

        d = {
            "replications": self.replications,
            "horizon": self.horizon,
            "band": self.band,
            "master_seed": self.master_seed,
            "extinct_by_gen": self.extinct_by_gen,
            "exploded_by_gen": self.exploded_by_gen,
            "mid_band_by_gen": self.mid_band_by_gen,
            "mid_band_freq": self.mid_band_freq,
            "mean_z": clean(self.mean_z),
            "var_z": clean(self.var_z),
            "survival_at_horizon": self.survival_at_horizon,
            "survival_ci": list(self.survival_ci),
            "survival_se": self.survival_se,
        }
        if self.w_samples_at_horizon is not None:
            d["w_samples_at_horizon"] = self.w_samples_at_horizon
        return d


def merge_blocks(blocks: list[BlockResult], replications: int, horizon: int, band: int,
                 master_seed: int) -> MCReport:
    R = replications
    extinct = sum(b.extinct for b in blocks)
    exploded = sum(b.exploded for b in blocks)
    mid = sum(b.mid_band for b in blocks)
    s1 = np.zeros(horizon + 1)
    s2 = np.zeros(horizon + 1)
    s4 = np.zeros(horizon + 1)
    for b in blocks:
        s1 += b.sum_z
        s2 += b.sum_z2
        s4 += b.sum_z4
    mean = s1 / R
    var = s2 / R - mean**2
    if R > 1:
        var = var * R / (R - 1)
    mean2 = s2 / R
    var2 = s4 / R - mean2**2
    if R > 1:
        var2 = var2 * R / (R - 1)
    for arr in (mean, var, mean2, var2):
        arr[exploded > 0] = np.nan
    survivors = R - int(extinct[-1])
    return MCReport(
        replications=R, horizon=horizon, band=band, master_seed=master_seed,
        extinct_by_gen=(extinct / R).tolist(), exploded_by_gen=(exploded / R).tolist(),
        mid_band_by_gen=(mid / R).tolist(), mean_z=mean.tolist(), var_z=np.maximum(var, 0).tolist(),
        mean_z2=mean2.tolist(), var_z2=np.maximum(var2, 0).tolist(),
        survival_at_horizon=survivors / R, survival_ci=wilson_interval(survivors, R),
        final_z=np.concatenate([b.final_z for b in blocks]),
    )


def monte_carlo(model: ModelSpec, horizon: int, replications: int, master_seed: int, *, band: int = 20,
                pop_cap: int = DEFAULT_POP_CAP, workers: int = 1, block_size: int = DEFAULT_BLOCK) -> MCReport:
    """Run ``replications`` independent paths up to ``horizon``."""
    if replications < 1:
        raise ValueError("replications must be >= 1")
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    sizes = [block_size] * (replications // block_size)
    if replications % block_size:
        sizes.append(replications % block_size)
    tasks = [(model, horizon, s, int(master_seed), i, band, pop_cap) for i, s in enumerate(sizes)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_run_block, tasks))
    else:
        blocks = [_run_block(t) for t in tasks]
    return merge_blocks(blocks, replications, horizon, band, int(master_seed))
