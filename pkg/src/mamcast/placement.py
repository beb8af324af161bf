"""Antenna placement for a fixed beamformer and the outer alternating loop."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from mamcast import kernels
from mamcast.channel import PlacementSet, PositionGrid, UserChannelModel, gain_table, noise_powers
from mamcast.convex_core import Beamformer, min_snr, sca_beamform, weakest_user_mrt


@dataclass(frozen=True)
class AoState:
    placement: PlacementSet
    beamformer: Beamformer
    iterations: int
    trace: tuple  # rate after each outer round, trace[0] is the starting point
    converged: bool = False
    position_searches: int = 0

    @property
    def rate(self) -> float:
        return self.trace[-1]


@dataclass
class GainCache:
    """Noise-normalised (M, K) channel table, computed once per scenario."""

    table: np.ndarray
    noise: np.ndarray

    @classmethod
    def build(cls, scenario: Sequence[UserChannelModel], grid: PositionGrid) -> "GainCache":
        noise = noise_powers(scenario)
        return cls(gain_table(scenario, grid) / np.sqrt(noise)[None, :], noise)

    def channels(self, placement: PlacementSet) -> np.ndarray:
        """(K, N) channel matrix, noise-normalised."""
        return self.table[placement.array].T

    def snr(self, placement: PlacementSet, w) -> float:
        return min_snr(self.channels(placement), 1.0, w)


def _cache(scenario, grid, cache):
    return cache if cache is not None else GainCache.build(scenario, grid)


def _w(w):
    return w.weights if isinstance(w, Beamformer) else np.asarray(w, dtype=complex).ravel()


def best_single_position(scenario, grid: PositionGrid, placement: PlacementSet, w, n: int,
                         cache: GainCache | None = None) -> int:
    """Grid index maximising the min-SNR when only antenna ``n`` (0-based) moves."""
    placement.validate(grid)
    if not 0 <= n < len(placement):
        raise IndexError(f"antenna index {n} out of range")
    c = _cache(scenario, grid, cache)
    m, _, _ = kernels.position_scan(c.table, placement.array, _w(w).astype(complex), n)
    return int(m)


def optimize_positions(scenario, grid: PositionGrid, placement: PlacementSet, w, eps=1e-4,
                       max_sweeps=100, cache: GainCache | None = None, stats: dict | None = None) -> PlacementSet:
    """Element-wise sweeps over n = 0..N-1 until the fractional min-SNR gain is below ``eps``."""
    placement.validate(grid)
    c = _cache(scenario, grid, cache)
    w = _w(w).astype(complex)
    idx = placement.array.copy()
    objective = c.snr(placement, w)
    searches = 0
    for _ in range(max_sweeps):
        before, saved = objective, idx.copy()
        for n in range(idx.shape[0]):
            m, best, current = kernels.position_scan(c.table, idx, w, n)
            searches += 1
            assert best >= current
            idx[n] = m
        objective = c.snr(PlacementSet(tuple(idx)), w)
        if objective < before:  # summation-order rounding only
            idx, objective = saved, before
        if objective <= before or (before > 0 and (objective - before) / before < eps):
            break
    if stats is not None:
        stats["position_searches"] = stats.get("position_searches", 0) + searches
    return PlacementSet(tuple(idx))


def ao_joint(scenario, grid: PositionGrid, placement: PlacementSet, w0: Beamformer | None = None,
             eps=1e-4, P: float | None = None, max_rounds=30, cache: GainCache | None = None) -> AoState:
    """Alternate SCA beamforming and element-wise placement until the rate stalls.

    Without ``w0`` the start is MRT towards the weakest user at budget ``P``.
    """
    placement.validate(grid)
    c = _cache(scenario, grid, cache)
    if w0 is None:
        if P is None:
            raise ValueError("need either w0 or P")
        w = weakest_user_mrt(c.channels(placement), 1.0, P)
    else:
        P = w0.budget
        w = w0.weights.astype(complex)
    stats: dict = {}
    rate = float(np.log2(1.0 + c.snr(placement, w)))
    trace = [rate]
    rounds = 0
    converged = False
    while rounds < max_rounds:
        w = sca_beamform(c.channels(placement), 1.0, P, w0=w).beamformer.weights
        placement = optimize_positions(scenario, grid, placement, w, eps, cache=c, stats=stats)
        rounds += 1
        new_rate = float(np.log2(1.0 + c.snr(placement, w)))
        gain = (new_rate - rate) / rate if rate > 0 else np.inf
        rate = new_rate
        trace.append(rate)
        if gain < eps:
            converged = True
            break
    return AoState(placement, Beamformer(w, P), rounds, tuple(trace), converged,
                   stats.get("position_searches", 0))


def rate_upper_bound(scenario, grid: PositionGrid, P: float, cache: GainCache | None = None) -> float:
    """log2(1 + P max_k ||full-grid channel||^2 / sigma_k^2), a loose cap on any placement."""
    c = _cache(scenario, grid, cache)
    return float(np.log2(1.0 + P * (np.abs(c.table) ** 2).sum(axis=0).max()))
