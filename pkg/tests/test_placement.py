import itertools

import numpy as np
import pytest

from conftest import LAMBDA, NOISE, POWER, los_user, default_scenario
from mamcast.channel import (
    PathComponent,
    PlacementSet,
    PositionGrid,
    UserChannelModel,
    channel_vector,
)
from mamcast.convex_core import Beamformer, min_snr, sca_beamform
from mamcast.placement import (
    GainCache,
    ao_joint,
    best_single_position,
    optimize_positions,
    rate_upper_bound,
)


def direct_min_snr(scenario, grid, placement, w):
    """Per-user evaluation from the channel model, bypassing the gain cache."""
    return min(
        abs(np.vdot(channel_vector(u, placement, grid), w)) ** 2 / u.noise_power for u in scenario
    )


def test_full_grid_leaves_only_current_position():
    grid = PositionGrid.square(4, LAMBDA)
    scen = default_scenario(1, K=2)
    pl = PlacementSet((2, 0, 3, 1))
    w = np.ones(4, dtype=complex) / 2
    for n in range(4):
        assert best_single_position(scen, grid, pl, w, n) == pl.indices[n]


def test_single_antenna_scan_matches_full_grid(grid25):
    scen = default_scenario(2, K=1)
    pl = PlacementSet((7,))
    w = np.array([np.sqrt(POWER)], dtype=complex)
    m = best_single_position(scen, grid25, pl, w, 0)
    gains = [abs(channel_vector(scen[0], PlacementSet((i,)), grid25)[0]) ** 2 for i in range(25)]
    assert m == int(np.argmax(gains))


def test_user_order_does_not_change_choice(rng, grid25):
    scen = default_scenario(3)
    pl = PlacementSet((0, 6, 12, 18))
    w = rng.normal(size=4) + 1j * rng.normal(size=4)
    for n in range(4):
        a = best_single_position(scen, grid25, pl, w, n)
        b = best_single_position(scen[::-1], grid25, pl, w, n)
        assert a == b


def test_scan_maximises_min_snr(rng, grid25):
    scen = default_scenario(4)
    pl = PlacementSet((1, 8, 14, 22))
    w = rng.normal(size=4) + 1j * rng.normal(size=4)
    for n in range(4):
        m = best_single_position(scen, grid25, pl, w, n)
        best = direct_min_snr(scen, grid25, pl.replace(n, m), w)
        for cand in range(25):
            if cand in pl.indices and cand != pl.indices[n]:
                continue
            assert direct_min_snr(scen, grid25, pl.replace(n, cand), w) <= best * (1 + 1e-12)


def test_gain_cache_agrees_with_direct_evaluation(rng, grid25):
    scen = default_scenario(5)
    cache = GainCache.build(scen, grid25)
    pl = PlacementSet((3, 4, 10, 17))
    w = rng.normal(size=4) + 1j * rng.normal(size=4)
    assert cache.snr(pl, w) == pytest.approx(direct_min_snr(scen, grid25, pl, w), rel=1e-12)


def test_fixed_point_is_unchanged(grid25):
    scen = default_scenario(6)
    cache = GainCache.build(scen, grid25)
    w = sca_beamform(cache.channels(PlacementSet((0, 1, 2, 3))), 1.0, POWER).beamformer
    once = optimize_positions(scen, grid25, PlacementSet((0, 1, 2, 3)), w, eps=0.0, cache=cache)
    again = optimize_positions(scen, grid25, once, w, eps=0.0, cache=cache)
    assert again == once


@pytest.mark.parametrize("seed", range(10))
def test_sweep_never_decreases_objective(seed):
    grid = PositionGrid.square(9, LAMBDA)
    scen = default_scenario(seed, K=2)
    rng = np.random.default_rng(seed)
    pl = PlacementSet.random(rng, 9, 2)
    w = rng.normal(size=2) + 1j * rng.normal(size=2)
    out = optimize_positions(scen, grid, pl, w)
    assert direct_min_snr(scen, grid, out, w) >= direct_min_snr(scen, grid, pl, w) * (1 - 1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_small_los_against_ordered_exhaustive(seed):
    rng = np.random.default_rng(seed)
    grid = PositionGrid.for_size(6, LAMBDA)
    scen = [los_user(rng), los_user(rng)]
    w = np.exp(1j * rng.uniform(0, 2 * np.pi, 2)) / np.sqrt(2)
    start = PlacementSet((0, 1))
    out = optimize_positions(scen, grid, start, w, eps=0.0)
    best = max(direct_min_snr(scen, grid, PlacementSet(p), w) for p in itertools.permutations(range(6), 2))
    got = direct_min_snr(scen, grid, out, w)
    assert direct_min_snr(scen, grid, start, w) <= got * (1 + 1e-12)
    assert got <= best * (1 + 1e-12)


def test_ao_single_round_with_infinite_eps(grid25):
    scen = default_scenario(7)
    st = ao_joint(scen, grid25, PlacementSet((0, 1, 2, 3)), eps=np.inf, P=POWER)
    assert st.iterations == 1
    assert st.trace[1] >= st.trace[0]


@pytest.mark.parametrize("seed", range(5))
def test_ao_trace_monotone_and_state_consistent(seed, grid25):
    scen = default_scenario(seed)
    st = ao_joint(scen, grid25, PlacementSet((6, 7, 8, 9)), P=POWER)
    assert np.all(np.diff(st.trace) >= -1e-9)
    assert st.beamformer.power <= POWER * (1 + 1e-9)
    assert np.log2(1 + direct_min_snr(scen, grid25, st.placement, st.beamformer.weights)) == pytest.approx(
        st.rate, rel=1e-10)
    assert st.rate <= rate_upper_bound(scen, grid25, POWER)


def test_ao_dominates_fixed_start_with_same_beamformer(grid25):
    scen = default_scenario(8)
    start = PlacementSet((10, 11, 12, 13))
    cache = GainCache.build(scen, grid25)
    fixed = sca_beamform(cache.channels(start), 1.0, POWER).beamformer
    fixed_rate = np.log2(1 + min_snr(cache.channels(start), 1.0, fixed))
    st = ao_joint(scen, grid25, start, P=POWER, cache=cache)
    assert st.rate >= fixed_rate - 1e-12


def test_ao_requires_power_or_start(grid25):
    with pytest.raises(ValueError):
        ao_joint(default_scenario(0), grid25, PlacementSet((0, 1, 2, 3)))


def test_ao_accepts_explicit_start_beamformer(grid25):
    w0 = Beamformer(np.full(4, np.sqrt(POWER / 4), dtype=complex), POWER)
    st = ao_joint(default_scenario(0), grid25, PlacementSet((0, 1, 2, 3)), w0=w0)
    assert st.trace[0] == pytest.approx(
        np.log2(1 + direct_min_snr(default_scenario(0), grid25, PlacementSet((0, 1, 2, 3)), w0.weights)))


def test_scan_rejects_bad_antenna_index(grid25):
    with pytest.raises(IndexError):
        best_single_position(default_scenario(0), grid25, PlacementSet((0, 1)), np.ones(2), 2)


def test_noise_enters_through_cache():
    grid = PositionGrid.square(9, LAMBDA)
    u = UserChannelModel((PathComponent(1.0, 0.5, 0.5),), NOISE)
    cache = GainCache.build([u], grid)
    np.testing.assert_allclose(np.abs(cache.table) ** 2, 1.0 / NOISE, rtol=1e-12)
