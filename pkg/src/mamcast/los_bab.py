"""Two-user line-of-sight placement as a cardinality-constrained binary QP.

With equal path loss the multicast rate grows with |a_1^H a_2|^2 = a^T Q a over
binary selections ``a`` of N grid points, so the placement problem reduces to
maximising that quadratic form.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import NamedTuple

import numpy as np

from mamcast import kernels
from mamcast.channel import PositionGrid
from mamcast.errors import NotLosError, SearchCapExceeded

EXHAUSTIVE_CAP = 10**6


@dataclass(frozen=True)
class CouplingMatrix:
    Q: np.ndarray
    g: np.ndarray
    g1: np.ndarray
    g2: np.ndarray

    @property
    def size(self) -> int:
        return self.Q.shape[0]


@dataclass(frozen=True)
class SelectionVector:
    a: np.ndarray

    @classmethod
    def from_indices(cls, indices, m: int) -> "SelectionVector":
        a = np.zeros(m, dtype=np.int64)
        a[np.asarray(indices, dtype=np.int64)] = 1
        return cls(a)

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.a)

    @property
    def cardinality(self) -> int:
        return int(self.a.sum())


@dataclass(frozen=True)
class BabState:
    """A node of the search tree: selected set, raw and shifted objective."""

    Q: np.ndarray
    X: float
    Y: float
    selected: tuple = ()
    f: float = 0.0
    qa: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.qa is None:
            object.__setattr__(self, "qa", np.zeros(self.Q.shape[0]))

    @property
    def depth(self) -> int:
        return len(self.selected)

    @property
    def shifted(self) -> float:
        n = self.depth
        return self.f - 2 * n * self.X - n * self.Y

    @property
    def remaining(self) -> list:
        chosen = set(self.selected)
        return [k for k in range(self.Q.shape[0]) if k not in chosen]

    def extend(self, k: int) -> "BabState":
        f_next = objective_increment(self, k)
        return BabState(self.Q, self.X, self.Y, self.selected + (int(k),), f_next, self.qa + self.Q[k])


class BabResult(NamedTuple):
    selection: SelectionVector
    objective: float
    visited_nodes: int
    shifted_objective: float = float("nan")


class ExhaustiveResult(NamedTuple):
    selection: SelectionVector
    objective: float
    evaluated: int


def build_coupling(grid: PositionGrid, rho1, rho2, wavelength: float | None = None) -> CouplingMatrix:
    lam = grid.wavelength if wavelength is None else wavelength
    k0 = 2.0 * np.pi / lam
    g1 = np.exp(1j * k0 * (grid.positions @ np.asarray(rho1, dtype=float)))
    g2 = np.exp(1j * k0 * (grid.positions @ np.asarray(rho2, dtype=float)))
    g = np.conj(g1) * g2
    Q = np.outer(g.real, g.real) + np.outer(g.imag, g.imag)
    return CouplingMatrix(Q, g, g1, g2)


def quad_form(Q: np.ndarray, indices) -> float:
    idx = np.asarray(indices, dtype=np.int64)
    return float(Q[np.ix_(idx, idx)].sum())


def objective_increment(state: BabState, k: int) -> float:
    """f_{n+1} after adding candidate ``k``."""
    if k in state.selected:
        raise ValueError(f"candidate {k} is already selected")
    return state.f + 2.0 * state.qa[k] + state.Q[k, k]


def shift_constants(Q: np.ndarray) -> tuple[float, float]:
    """(X, Y): largest row sum of |Q| and largest diagonal entry."""
    return float(np.abs(Q).sum(axis=1).max()), float(np.diag(Q).max())


def _matrix(Q):
    return Q.Q if isinstance(Q, CouplingMatrix) else np.asarray(Q, dtype=float)


def greedy_selection(Q, N: int) -> np.ndarray:
    """Add, one at a time, the index with the largest increase of a^T Q a."""
    Q = _matrix(Q)
    qa = np.zeros(Q.shape[0])
    free = np.ones(Q.shape[0], dtype=bool)
    picked = []
    for _ in range(N):
        inc = np.where(free, 2.0 * qa + np.diag(Q), -np.inf)
        k = int(np.argmax(inc))
        picked.append(k)
        free[k] = False
        qa += Q[k]
    return np.array(sorted(picked), dtype=np.int64)


def bab_search(Q, N: int, bound: str = "completion", warm_start: bool = False) -> BabResult:
    """Best-first branch-and-bound for max a^T Q a with sum(a) = N.

    Children are scored by the shifted objective and explored in descending
    order while they beat the incumbent. ``bound="shift"`` prunes only on the
    shifted score; ``"completion"`` additionally drops a child whose
    optimistic completion cannot beat the incumbent. That completion adds,
    for the r picks still to make, the r largest entries of 2 Q a over the
    remaining indices plus r(r-1) times the largest off-diagonal entry, so it
    is valid for any symmetric Q.

    ``warm_start`` seeds the incumbent with the greedy selection instead of
    minus infinity.
    """
    Q = _matrix(Q)
    m = Q.shape[0]
    if not 1 <= N <= m:
        raise ValueError(f"need 1 <= N <= M, got N={N}, M={m}")
    if bound not in ("shift", "completion"):
        raise ValueError(f"unknown bound {bound!r}")
    X, Y = shift_constants(Q)
    Z = float((Q - np.diag(np.full(m, np.inf))).max()) if m > 1 else 0.0
    best0, warm = -np.inf, None
    if warm_start:
        warm = greedy_selection(Q, N)
        best0 = quad_form(Q, warm) - 2 * N * X - N * Y
    sel, best, visited = kernels.bab(np.ascontiguousarray(Q), N, X, Y, Z, bound == "completion", best0)
    if sel[0] < 0:  # nothing beat the warm incumbent, which is then optimal
        sel = warm
    selection = SelectionVector.from_indices(sel, m)
    return BabResult(selection, quad_form(Q, sel), int(visited), float(best))


def exhaustive_search(Q, N: int, cap: int = EXHAUSTIVE_CAP, g: np.ndarray | None = None) -> ExhaustiveResult:
    """Lexicographic enumeration of all N-subsets."""
    if isinstance(Q, CouplingMatrix):
        g = Q.g if g is None else g
    Q = _matrix(Q)
    m = Q.shape[0]
    if not 1 <= N <= m:
        raise ValueError(f"need 1 <= N <= M, got N={N}, M={m}")
    if comb(m, N) > cap:
        raise SearchCapExceeded(f"C({m}, {N}) = {comb(m, N)} exceeds cap {cap}")
    if g is None:
        g = _factor(Q)
    if g is None:
        return _exhaustive_general(Q, N)
    idx, _, evaluated = kernels.exhaustive(np.ascontiguousarray(g, dtype=complex), N)
    return ExhaustiveResult(SelectionVector.from_indices(idx, m), quad_form(Q, idx), int(evaluated))


def _exhaustive_general(Q, N):
    m = Q.shape[0]
    best, best_idx = -np.inf, None
    evaluated = 0
    for sub in combinations(range(m), N):
        val = quad_form(Q, sub)
        evaluated += 1
        if val > best:
            best, best_idx = val, sub
    return ExhaustiveResult(SelectionVector.from_indices(best_idx, m), best, evaluated)


def _factor(Q):
    """Complex g with Re(conj(g) g^T) = Q, or None unless Q is PSD of rank <= 2."""
    if Q.shape[0] < 2:
        return None
    evals, evecs = np.linalg.eigh(Q)
    top = np.clip(evals[-2:], 0.0, None)
    if np.abs(evals[:-2]).max(initial=0.0) > 1e-9 * max(evals[-1], 1e-300) or evals[-2] < -1e-9 * abs(evals[-1]):
        return None
    u = evecs[:, -1] * np.sqrt(top[1])
    v = evecs[:, -2] * np.sqrt(top[0])
    return u + 1j * v


def full_tree_nodes(M: int, N: int) -> int:
    return kernels.full_tree_nodes(M, N)


def los_parameters(scenario, tol: float = 1e-9):
    """(rho1, rho2, kappa, noise) of an equal-gain two-user LoS scenario."""
    if len(scenario) != 2 or any(len(u.paths) != 1 for u in scenario):
        raise NotLosError("expected two single-path users")
    u1, u2 = scenario
    k1, k2 = abs(u1.paths[0].gain) ** 2, abs(u2.paths[0].gain) ** 2
    if abs(k1 - k2) > tol * max(k1, k2) or abs(u1.noise_power - u2.noise_power) > tol * u1.noise_power:
        raise NotLosError("LoS closed form needs equal path gains and noise powers")
    return u1.paths[0].direction, u2.paths[0].direction, k1, u1.noise_power


def los_rate(selection, Q, N: int, P: float, kappa: float, noise: float, tol: float = 1e-9) -> float:
    """Closed-form LoS multicast rate of a selection under equal path loss."""
    idx = selection.indices if isinstance(selection, SelectionVector) else np.asarray(selection)
    if len(idx) != N:
        raise ValueError("selection cardinality differs from N")
    corr = np.sqrt(max(quad_form(_matrix(Q), idx), 0.0))
    if corr >= N * (1.0 - tol):
        return float(np.log2(1.0 + P * N * kappa / noise))
    return float(np.log2(1.0 + P * kappa * (N + corr) / (2.0 * noise)))


# ---------------------------------------------------------------------------
# plain-text instances
# ---------------------------------------------------------------------------

RESULT_COLUMNS = ("M", "N", "method", "objective", "rate", "visited_nodes", "wall_time")


def save_instance(path, Q, N: int) -> None:
    """First line N, then the M x M matrix, one row per line."""
    Q = _matrix(Q)
    with open(path, "w") as fh:
        fh.write(f"{int(N)}\n")
        np.savetxt(fh, Q, fmt="%.17g")


def load_instance(path) -> tuple[np.ndarray, int]:
    with open(path) as fh:
        N = int(fh.readline())
        Q = np.atleast_2d(np.loadtxt(fh, dtype=float))
    if Q.shape[0] != Q.shape[1]:
        raise ValueError(f"instance matrix is {Q.shape[0]}x{Q.shape[1]}, expected square")
    if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(np.abs(Q).max(), 1.0)):
        raise ValueError("instance matrix is not symmetric")
    return Q, N


def solve_instance(Q, N: int, methods=("bab", "exhaustive"), snr: float = 1.0) -> list[tuple]:
    """Result rows (see RESULT_COLUMNS) for each method.

    ``snr`` is the per-antenna link SNR P*kappa/sigma^2 used to turn the
    objective into a rate.
    """
    from time import perf_counter

    Q = _matrix(Q)
    rows = []
    for method in methods:
        t0 = perf_counter()
        if method == "bab":
            res = bab_search(Q, N)
            visited = res.visited_nodes
        elif method == "exhaustive":
            res = exhaustive_search(Q, N)
            visited = full_tree_nodes(Q.shape[0], N)
        else:
            raise ValueError(f"unknown method {method!r}")
        elapsed = perf_counter() - t0
        rows.append((Q.shape[0], N, method, res.objective,
                     los_rate(res.selection, Q, N, snr, 1.0, 1.0), visited, elapsed))
    return rows
