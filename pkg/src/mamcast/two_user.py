"""Closed-form two-user multicast beamforming and greedy placement."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from mamcast import kernels
from mamcast.channel import PlacementSet, PositionGrid
from mamcast.convex_core import Beamformer
from mamcast.errors import DimensionMismatchError, ZeroChannelError
from mamcast.placement import GainCache

BRANCH_SLACK = 1e-12


@dataclass(frozen=True)
class TwoUserGeometry:
    """Scaled channels h_i * sqrt(P) / sigma_i and their energies / cross term."""

    h1: np.ndarray
    h2: np.ndarray
    alpha1: float
    alpha2: float
    alpha12: complex

    @property
    def cross(self) -> float:
        return abs(self.alpha12)

    def branch(self) -> int:
        """1 or 2 for the MRT cases, 0 for the balanced interior case."""
        slack = BRANCH_SLACK * max(self.alpha1, self.alpha2)
        if self.alpha1 <= self.cross + slack:
            return 1
        if self.alpha2 <= self.cross + slack:
            return 2
        return 0


@dataclass(frozen=True)
class KktSolution:
    mu1: float
    mu2: float
    lam: float  # Lagrange multiplier of the unit-norm constraint, not the wavelength
    p: np.ndarray
    x: float


class TwoUserSolution(NamedTuple):
    beamformer: Beamformer
    rate: float


class GreedyResult(NamedTuple):
    placement: PlacementSet
    beamformer: Beamformer
    rate: float
    evaluations: int


def two_user_geometry(h1, h2, noise1: float, noise2: float, P: float) -> TwoUserGeometry:
    h1 = np.asarray(h1, dtype=complex).ravel()
    h2 = np.asarray(h2, dtype=complex).ravel()
    if h1.shape != h2.shape:
        raise DimensionMismatchError(f"channel lengths differ: {h1.shape} vs {h2.shape}")
    if noise1 <= 0 or noise2 <= 0:
        raise ValueError("noise powers must be positive")
    s1 = np.sqrt(P / noise1) * h1
    s2 = np.sqrt(P / noise2) * h2
    return TwoUserGeometry(s1, s2, float(np.vdot(s1, s1).real), float(np.vdot(s2, s2).real),
                           complex(np.vdot(s1, s2)))


def two_user_snr(geom: TwoUserGeometry) -> float:
    return float(kernels.two_user_snr(geom.alpha1, geom.alpha2, geom.cross))


def two_user_rate(geom: TwoUserGeometry) -> float:
    b = geom.branch()
    if b == 1:
        return float(np.log2(1.0 + geom.alpha1))
    if b == 2:
        return float(np.log2(1.0 + geom.alpha2))
    denom = geom.alpha1 + geom.alpha2 - 2.0 * geom.cross
    assert denom > 0.0, "interior branch needs alpha1 + alpha2 > 2|alpha12|"
    return float(np.log2(1.0 + (geom.alpha1 * geom.alpha2 - geom.cross**2) / denom))


def kkt_solution(geom: TwoUserGeometry) -> KktSolution:
    if geom.alpha1 == 0.0 and geom.alpha2 == 0.0:
        raise ZeroChannelError("both channels are zero")
    b = geom.branch()
    if b == 1:
        return KktSolution(1.0, 0.0, geom.alpha1, geom.h1 / np.sqrt(geom.alpha1), geom.alpha1)
    if b == 2:
        return KktSolution(0.0, 1.0, geom.alpha2, geom.h2 / np.sqrt(geom.alpha2), geom.alpha2)
    c = geom.cross
    denom = geom.alpha1 + geom.alpha2 - 2.0 * c
    mu1 = (geom.alpha2 - c) / denom
    mu2 = (geom.alpha1 - c) / denom
    lam = (geom.alpha1 * geom.alpha2 - c * c) / denom
    phase = np.exp(-1j * np.angle(geom.alpha12)) if c > 0 else 1.0
    p = mu1 * geom.h1 + mu2 * phase * geom.h2
    p = p / np.linalg.norm(p)
    return KktSolution(mu1, mu2, lam, p, lam)


def optimal_beamformer_two_user(geom: TwoUserGeometry, P: float) -> TwoUserSolution:
    """Closed-form max-min beamformer; MRT when one user dominates, else the balanced mix."""
    sol = kkt_solution(geom)
    return TwoUserSolution(Beamformer(np.sqrt(P) * sol.p, P), two_user_rate(geom))


def solve_two_user(h1, h2, noise1, noise2, P) -> TwoUserSolution:
    return optimal_beamformer_two_user(two_user_geometry(h1, h2, noise1, noise2, P), P)


def greedy_placement(scenario, grid: PositionGrid, N: int, P: float,
                     cache: GainCache | None = None) -> GreedyResult:
    """Add, one at a time, the grid point with the largest closed-form rate increment."""
    if len(scenario) != 2:
        raise ValueError("greedy placement is defined for exactly two users")
    if not 1 <= N <= grid.size:
        raise ValueError(f"need 1 <= N <= M, got N={N}, M={grid.size}")
    c = cache if cache is not None else GainCache.build(scenario, grid)
    scaled = np.sqrt(P) * c.table  # columns are sqrt(P)/sigma_k * h_k over the grid
    order, evaluated = kernels.greedy_two_user(
        np.ascontiguousarray(scaled[:, 0]), np.ascontiguousarray(scaled[:, 1]), N
    )
    placement = PlacementSet(tuple(int(i) for i in order))
    H = c.channels(placement)
    bf, rate = solve_two_user(H[0], H[1], 1.0, 1.0, P)
    return GreedyResult(placement, bf, rate, int(evaluated))
