"""Monte Carlo drivers for the five simulation studies."""
from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from mamcast.channel import (
    PlacementSet,
    PositionGrid,
    ScenarioRng,
    UserChannelModel,
    channel_at,
    dbm_to_watt,
    noise_powers,
    sample_los_pair,
    sample_scenario,
    wavelength_from_ghz,
)
from mamcast.convex_core import Beamformer, min_snr, sca_beamform
from mamcast.harness.config import ExperimentConfig
from mamcast.los_bab import (
    bab_search,
    build_coupling,
    exhaustive_search,
    full_tree_nodes,
    los_parameters,
    los_rate,
)
from mamcast.placement import GainCache, ao_joint
from mamcast.two_user import greedy_placement, solve_two_user

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    method: str
    m: int
    n: int
    k: int
    power_dbm: float
    rate: float
    iterations: int = 0
    visited_nodes: int = 0
    wall_time: float = 0.0
    trace: tuple = field(default=(), repr=False)


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------


def ula_positions(N: int, wavelength: float) -> np.ndarray:
    """Half-wavelength ULA on the x-axis, centred on the origin."""
    x = (np.arange(N) - (N - 1) / 2.0) * wavelength / 2.0
    return np.column_stack([x, np.zeros(N)])


def _beamform(H: np.ndarray, noise: np.ndarray, P: float) -> tuple[Beamformer, float]:
    if H.shape[0] == 2:
        return solve_two_user(H[0], H[1], noise[0], noise[1], P)
    bf = sca_beamform(H, noise, P).beamformer
    return bf, float(np.log2(1.0 + min_snr(H, noise, bf)))


def fpa_baseline(scenario: Sequence[UserChannelModel], N: int, wavelength: float, P: float):
    """Fixed ULA at its true (off-grid) coordinates; closed form for K=2, SCA otherwise."""
    pts = ula_positions(N, wavelength)
    H = np.array([channel_at(u, pts, wavelength) for u in scenario])
    return _beamform(H, noise_powers(scenario), P)


def fpa_grid_placement(grid: PositionGrid, N: int) -> PlacementSet:
    return grid.nearest(ula_positions(N, grid.wavelength))


def fpa_grid_baseline(scenario, grid: PositionGrid, N: int, P: float, cache: GainCache | None = None):
    """ULA snapped to the nearest grid points, beamformed by SCA from weakest-user MRT."""
    c = cache if cache is not None else GainCache.build(scenario, grid)
    H = c.channels(fpa_grid_placement(grid, N))
    bf = sca_beamform(H, 1.0, P).beamformer
    return bf, float(np.log2(1.0 + min_snr(H, 1.0, bf)))


# ---------------------------------------------------------------------------
# per-trial execution
# ---------------------------------------------------------------------------


def _grid(cfg: ExperimentConfig, m: int) -> PositionGrid:
    return PositionGrid.for_size(m, wavelength_from_ghz(cfg.carrier_ghz), cfg.spacing)


def _scenario(cfg: ExperimentConfig, trial: int, k: int):
    rng = ScenarioRng(cfg.seed, trial)
    noise = float(dbm_to_watt(cfg.noise_dbm))
    if cfg.experiment in ("two_user_los", "bab_complexity"):
        return sample_los_pair(rng, cfg.cell_radius, cfg.carrier_ghz, noise)
    return sample_scenario(rng, k, cfg.paths, cfg.cell_radius, cfg.carrier_ghz, noise)


def _init_rng(cfg: ExperimentConfig, trial: int, m: int, n: int, k: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(trial, 1, m, n, k))
    return np.random.default_rng(ss)


def run_method(method: str, cfg: ExperimentConfig, scenario, grid: PositionGrid, n: int, P: float,
               cache: GainCache, init_rng: np.random.Generator | None = None) -> dict:
    """Run one method on one realisation; returns rate / iterations / visited / trace."""
    if method == "ao_sca":
        if cfg.init == "random":
            placement = PlacementSet.random(init_rng, grid.size, n)
            w0 = init_rng.normal(size=n) + 1j * init_rng.normal(size=n)
            w0 = Beamformer(w0 * np.sqrt(P) / np.linalg.norm(w0), P)
        else:
            placement, w0 = fpa_grid_placement(grid, n), None
        st = ao_joint(scenario, grid, placement, w0, eps=cfg.eps, P=P, cache=cache)
        return {"rate": st.rate, "iterations": st.iterations, "trace": st.trace,
                "visited_nodes": st.position_searches}
    if method == "fpa":
        _, rate = fpa_baseline(scenario, n, grid.wavelength, P)
        return {"rate": rate}
    if method == "fpa_grid":
        _, rate = fpa_grid_baseline(scenario, grid, n, P, cache)
        return {"rate": rate}
    if method == "greedy":
        res = greedy_placement(scenario, grid, n, P, cache)
        return {"rate": res.rate, "visited_nodes": res.evaluations}
    if method in ("bab", "exhaustive"):
        rho1, rho2, kappa, noise = los_parameters(scenario)
        coupling = build_coupling(grid, rho1, rho2)
        if method == "bab":
            res = bab_search(coupling, n)
            visited = res.visited_nodes
        else:
            res = exhaustive_search(coupling, n)
            visited = full_tree_nodes(grid.size, n)
        return {"rate": los_rate(res.selection, coupling.Q, n, P, kappa, noise),
                "visited_nodes": visited}
    raise ValueError(f"unknown method {method!r}")


def sweep_points(cfg: ExperimentConfig):
    return list(itertools.product(cfg.m, cfg.n, cfg.k, cfg.power_dbm))


def run_trial(cfg: ExperimentConfig, trial: int) -> list[TrialRecord]:
    records = []
    scenarios: dict = {}
    for m, n, k, p_dbm in sweep_points(cfg):
        if k not in scenarios:
            scenarios[k] = _scenario(cfg, trial, k)
        scenario = scenarios[k]
        grid = _grid(cfg, m)
        cache = GainCache.build(scenario, grid)
        P = float(dbm_to_watt(p_dbm))
        for method in cfg.methods:
            t0 = time.perf_counter()
            out = run_method(method, cfg, scenario, grid, n, P, cache, _init_rng(cfg, trial, m, n, k))
            records.append(TrialRecord(
                trial, method, m, n, k, p_dbm, float(out["rate"]), int(out.get("iterations", 0)),
                int(out.get("visited_nodes", 0)), time.perf_counter() - t0, tuple(out.get("trace", ())),
            ))
    return records


def run_experiment(cfg: ExperimentConfig, progress: bool = False) -> list[TrialRecord]:
    """All trials in trial-index order; output depends only on ``cfg``."""
    cfg.validate()
    records: list[TrialRecord] = []
    for trial in range(cfg.trials):
        records.extend(run_trial(cfg, trial))
        if progress and (trial + 1) % max(1, cfg.trials // 10) == 0:
            log.info("%s: %d/%d trials", cfg.experiment, trial + 1, cfg.trials)
    return records


def trial_scenarios(cfg: ExperimentConfig):
    """(trial, K, scenario) for every realisation the experiment draws."""
    for trial in range(cfg.trials):
        for k in cfg.k:
            yield trial, k, _scenario(cfg, trial, k)
