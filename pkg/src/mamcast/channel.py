"""Field-response channels over a discrete antenna-position grid."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from mamcast import kernels
from mamcast.errors import InvalidPlacementError

SPEED_OF_LIGHT = 299_792_458.0


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(watt):
    return 10.0 * np.log10(np.asarray(watt, dtype=float)) + 30.0


def wavelength_from_ghz(f0_ghz: float) -> float:
    return SPEED_OF_LIGHT / (f0_ghz * 1e9)


def path_loss_db(f0_ghz: float, distance_km: float) -> float:
    """Free-space loss ``-10 log10(mu)`` in dB."""
    return 92.5 + 20.0 * math.log10(f0_ghz) + 20.0 * math.log10(distance_km)


@dataclass(frozen=True)
class PositionGrid:
    """Candidate antenna positions, row-major, in meters.

    ``spacing`` is in wavelengths; ``positions`` has shape (M, 2).
    """

    positions: np.ndarray
    spacing: float
    wavelength: float

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise ValueError("positions must have shape (M, 2) with M >= 1")
        if self.wavelength <= 0 or self.spacing <= 0:
            raise ValueError("wavelength and spacing must be positive")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @classmethod
    def rectangular(cls, rows: int, cols: int, wavelength: float, spacing: float = 0.5) -> "PositionGrid":
        """rows x cols grid centred on the origin, row-major, x along columns."""
        m = rows * cols
        step = spacing * wavelength
        col, row = np.arange(m) % cols, np.arange(m) // cols
        pos = np.column_stack([(col - (cols - 1) / 2.0) * step, (row - (rows - 1) / 2.0) * step])
        return cls(pos, spacing, wavelength)

    @classmethod
    def square(cls, m: int, wavelength: float, spacing: float = 0.5) -> "PositionGrid":
        side = math.isqrt(m)
        if side * side != m:
            raise ValueError(f"M={m} is not a perfect square")
        return cls.rectangular(side, side, wavelength, spacing)

    @classmethod
    def for_size(cls, m: int, wavelength: float, spacing: float = 0.5) -> "PositionGrid":
        """Most nearly square rows x cols factorisation of M (rows <= cols)."""
        rows = max(r for r in range(1, math.isqrt(m) + 1) if m % r == 0)
        return cls.rectangular(rows, m // rows, wavelength, spacing)

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    @property
    def step(self) -> float:
        return self.spacing * self.wavelength

    def nearest(self, points: np.ndarray) -> "PlacementSet":
        """Distinct grid points closest to ``points``; ties go to the lower index."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[0] > self.size:
            raise InvalidPlacementError("more points than grid positions")
        taken: list[int] = []
        for p in points:
            d2 = ((self.positions - p) ** 2).sum(axis=1)
            d2 = np.round(d2 / self.step**2, 9)  # float noise would break ties
            d2[taken] = np.inf
            taken.append(int(np.argmin(d2)))
        return PlacementSet(tuple(taken))


@dataclass(frozen=True)
class PlacementSet:
    """Ordered grid indices of the N antennas."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(idx) < 1:
            raise InvalidPlacementError("placement needs at least one antenna")
        if len(set(idx)) != len(idx):
            raise InvalidPlacementError(f"duplicate antenna positions in {idx}")
        if min(idx) < 0:
            raise InvalidPlacementError(f"negative index in {idx}")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.int64)

    def validate(self, grid: PositionGrid) -> None:
        if max(self.indices) >= grid.size:
            raise InvalidPlacementError(
                f"index {max(self.indices)} out of range for grid of size {grid.size}"
            )

    def replace(self, n: int, index: int) -> "PlacementSet":
        idx = list(self.indices)
        idx[n] = int(index)
        return PlacementSet(tuple(idx))

    @classmethod
    def random(cls, rng: np.random.Generator, m: int, n: int) -> "PlacementSet":
        return cls(tuple(int(i) for i in rng.choice(m, size=n, replace=False)))


@dataclass(frozen=True)
class PathComponent:
    gain: complex
    theta: float
    phi: float

    @property
    def direction(self) -> np.ndarray:
        return np.array(
            [math.sin(self.theta) * math.cos(self.phi), math.cos(self.theta)]
        )


@dataclass(frozen=True)
class UserChannelModel:
    paths: tuple
    noise_power: float

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if len(self.paths) < 1:
            raise ValueError("a user needs at least one path")
        if not self.noise_power > 0:
            raise ValueError("noise power must be positive")

    @property
    def gains(self) -> np.ndarray:
        return np.array([p.gain for p in self.paths], dtype=complex)

    @property
    def directions(self) -> np.ndarray:
        return np.array([p.direction for p in self.paths])

    def conjugate(self) -> "UserChannelModel":
        paths = [PathComponent(np.conj(p.gain), p.theta, p.phi) for p in self.paths]
        return UserChannelModel(tuple(paths), self.noise_power)


@dataclass(frozen=True)
class ScenarioRng:
    """Seeded generator factory; each (seed, stream) pair is an independent stream."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.default_rng(ss)


def channel_gain(model: UserChannelModel, position, wavelength: float) -> complex:
    x = np.asarray(position, dtype=float)
    phase = (2.0 * np.pi / wavelength) * (model.directions @ x)
    return complex(np.sum(model.gains * np.exp(1j * phase)))


def channel_at(model: UserChannelModel, points: np.ndarray, wavelength: float) -> np.ndarray:
    """Channel gains at arbitrary (possibly off-grid) coordinates."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    phase = (2.0 * np.pi / wavelength) * (points @ model.directions.T)
    return np.exp(1j * phase) @ model.gains


def channel_vector(model: UserChannelModel, placement: PlacementSet, grid: PositionGrid) -> np.ndarray:
    placement.validate(grid)
    return channel_at(model, grid.positions[placement.array], grid.wavelength)


def steering_vector(direction, placement: PlacementSet, grid: PositionGrid, wavelength: float | None = None) -> np.ndarray:
    placement.validate(grid)
    lam = grid.wavelength if wavelength is None else wavelength
    t = grid.positions[placement.array]
    return np.exp(1j * (2.0 * np.pi / lam) * (t @ np.asarray(direction, dtype=float)))


def _stack(models: Sequence[UserChannelModel]):
    n_paths = max(len(m.paths) for m in models)
    gains = np.zeros((len(models), n_paths), dtype=complex)
    rho = np.zeros((len(models), n_paths, 2))
    for k, m in enumerate(models):
        gains[k, : len(m.paths)] = m.gains
        rho[k, : len(m.paths)] = m.directions
    return gains, rho


def gain_table(models: Sequence[UserChannelModel], grid: PositionGrid) -> np.ndarray:
    """(M, K) table of h_k(p_m) over every grid point."""
    gains, rho = _stack(models)
    return kernels.gain_table(grid.positions, gains, rho, grid.wavelength)


def noise_powers(models: Sequence[UserChannelModel]) -> np.ndarray:
    return np.array([m.noise_power for m in models])


# ---------------------------------------------------------------------------
# random scenarios
# ---------------------------------------------------------------------------


def _in_hexagon(x: float, y: float, radius: float) -> bool:
    ax, ay = abs(x), abs(y)
    return ax <= radius * math.sqrt(3) / 2 and ay <= radius - ax / math.sqrt(3)


def sample_user_distance(rng: np.random.Generator, cell_radius: float, floor: float = 1.0) -> float:
    """Distance of a point drawn uniformly in a pointy-top hexagon, floored at 1 m."""
    while True:
        x = rng.uniform(-cell_radius * math.sqrt(3) / 2, cell_radius * math.sqrt(3) / 2)
        y = rng.uniform(-cell_radius, cell_radius)
        if _in_hexagon(x, y, cell_radius):
            return max(math.hypot(x, y), floor)


def sample_path_gains(gen: np.random.Generator, mu: float, L: int) -> np.ndarray:
    """L i.i.d. CN(0, mu / L) path gains."""
    std = math.sqrt(mu / L / 2.0)
    return gen.normal(0.0, std, L) + 1j * gen.normal(0.0, std, L)


def sample_scenario(rng: ScenarioRng | np.random.Generator, K: int, L: int,
                    cell_radius: float, carrier_ghz: float, noise_power: float) -> list[UserChannelModel]:
    """Users uniform in a hexagonal cell, L Rayleigh paths with uniform angles."""
    if K < 1 or L < 1 or cell_radius <= 0:
        raise ValueError("need K >= 1, L >= 1 and a positive cell radius")
    gen = rng.generator() if isinstance(rng, ScenarioRng) else rng
    users = []
    for _ in range(K):
        dist = sample_user_distance(gen, cell_radius)
        mu = 10.0 ** (-path_loss_db(carrier_ghz, dist / 1000.0) / 10.0)
        g = sample_path_gains(gen, mu, L)
        theta = gen.uniform(0.0, math.pi, L)
        phi = gen.uniform(0.0, math.pi, L)
        paths = tuple(PathComponent(complex(g[i]), float(theta[i]), float(phi[i])) for i in range(L))
        users.append(UserChannelModel(paths, noise_power))
    return users


def sample_los_pair(rng: ScenarioRng | np.random.Generator, cell_radius: float,
                    carrier_ghz: float, noise_power: float) -> list[UserChannelModel]:
    """Two equidistant single-path users with equal gain magnitude and random phases."""
    gen = rng.generator() if isinstance(rng, ScenarioRng) else rng
    dist = sample_user_distance(gen, cell_radius)
    kappa = 10.0 ** (-path_loss_db(carrier_ghz, dist / 1000.0) / 10.0)
    users = []
    for _ in range(2):
        phase = gen.uniform(0.0, 2 * math.pi)
        theta, phi = gen.uniform(0.0, math.pi, 2)
        gain = math.sqrt(kappa) * complex(math.cos(phase), math.sin(phase))
        users.append(UserChannelModel((PathComponent(gain, float(theta), float(phi)),), noise_power))
    return users


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def scenario_to_dict(models: Sequence[UserChannelModel], **meta) -> dict:
    users = [
        {
            "noise_power": m.noise_power,
            "paths": [
                {"gain_re": p.gain.real, "gain_im": p.gain.imag, "theta": p.theta, "phi": p.phi}
                for p in m.paths
            ],
        }
        for m in models
    ]
    return {"users": users, **meta}


def scenario_from_dict(data: dict) -> list[UserChannelModel]:
    models = []
    for u in data["users"]:
        paths = tuple(
            PathComponent(complex(p["gain_re"], p["gain_im"]), float(p["theta"]), float(p["phi"]))
            for p in u["paths"]
        )
        models.append(UserChannelModel(paths, float(u["noise_power"])))
    return models


def save_scenario(path, models: Sequence[UserChannelModel], **meta) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(models, **meta), indent=1))


def load_scenario(path) -> tuple[list[UserChannelModel], dict]:
    data = json.loads(Path(path).read_text())
    meta = {k: v for k, v in data.items() if k != "users"}
    return scenario_from_dict(data), meta
