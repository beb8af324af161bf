"""Multicast objective and fixed-placement beamforming by SCA."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from mamcast import kernels
from mamcast.errors import DimensionMismatchError

POWER_SLACK = 1e-9


@dataclass(frozen=True)
class Beamformer:
    weights: np.ndarray
    budget: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex).ravel()
        if np.vdot(w, w).real > self.budget * (1.0 + POWER_SLACK) + 1e-300:
            raise ValueError(
                f"beamformer power {np.vdot(w, w).real:.6g} exceeds budget {self.budget:.6g}"
            )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def power(self) -> float:
        return float(np.vdot(self.weights, self.weights).real)


@dataclass(frozen=True)
class SubspaceCoefficients:
    eta: np.ndarray


class ScaResult(NamedTuple):
    beamformer: Beamformer
    trace: np.ndarray


class SubspaceResult(NamedTuple):
    beamformer: Beamformer
    coefficients: SubspaceCoefficients


def _as_channels(channels, noise) -> tuple[np.ndarray, np.ndarray]:
    H = np.asarray(channels, dtype=complex)
    if H.ndim == 1:
        H = H[None, :]
    if H.ndim != 2:
        raise DimensionMismatchError("channels must be a (K, N) array")
    noise = np.broadcast_to(np.asarray(noise, dtype=float), (H.shape[0],))
    return H, noise


def _weights(w) -> np.ndarray:
    return w.weights if isinstance(w, Beamformer) else np.asarray(w, dtype=complex).ravel()


def per_user_snr(channels, noise, w) -> np.ndarray:
    H, noise = _as_channels(channels, noise)
    w = _weights(w)
    if H.shape[1] != w.shape[0]:
        raise DimensionMismatchError(f"channels have N={H.shape[1]}, beamformer has {w.shape[0]}")
    return np.abs(H.conj() @ w) ** 2 / noise


def min_snr(channels, noise, w) -> float:
    return float(per_user_snr(channels, noise, w).min())


def multicast_rate(channels, noise, w) -> float:
    return float(np.log2(1.0 + min_snr(channels, noise, w)))


def rate_from_snr(snr):
    return np.log2(1.0 + np.asarray(snr))


# ---------------------------------------------------------------------------
# SCA subproblem
# ---------------------------------------------------------------------------


def _surrogate_rows(hs: np.ndarray, w_q: np.ndarray):
    """Real affine rows of the linearised constraints, scaled channels ``hs``."""
    proj = hs.conj() @ w_q
    c = hs * proj[:, None]
    A = 2.0 * np.concatenate([c.real, c.imag], axis=1)
    b = np.abs(proj) ** 2
    return A, b


def _to_real(w):
    return np.concatenate([w.real, w.imag])


def _to_complex(x):
    n = x.shape[0] // 2
    return x[:n] + 1j * x[n:]


def _project_ball(x, power):
    nrm2 = x @ x
    return x if nrm2 <= power else x * np.sqrt(power / nrm2)


def max_violation_descent(A, b, r, power, x0, max_iter=2000):
    """Projected subgradient with Polyak steps on max_k (b_k + r - A_k x) over the ball.

    Returns ``(x, feasible)``; feasibility means every constraint holds at x.
    """
    x = _project_ball(np.array(x0, dtype=float), power)
    for _ in range(max_iter):
        viol = b + r - A @ x
        k = int(np.argmax(viol))
        if viol[k] <= 0.0:
            return x, True
        ak = A[k]
        x = _project_ball(x + (viol[k] / (ak @ ak)) * ak, power)
    return x, bool((b + r - A @ x).max() <= 0.0)


def maxmin_ball_bisection(A, b, power, x0, rtol=1e-8, max_iter=2000):
    """Bisection on r with subgradient feasibility tests (independent of the active-set solver)."""
    x_best = _project_ball(np.array(x0, dtype=float), power)
    lo = float((A @ x_best - b).min())
    hi = float((np.sqrt(power) * np.linalg.norm(A, axis=1) - b).min())
    for _ in range(200):
        if hi - lo <= rtol * max(abs(hi), abs(lo), 1e-300):
            break
        mid = 0.5 * (lo + hi)
        x, ok = max_violation_descent(A, b, mid, power, x_best, max_iter)
        if ok:
            lo, x_best = float((A @ x - b).min()), x
        else:
            hi = mid
    return x_best, lo


def _solve_real(A, b, power, x0):
    """max_x min_k (A_k x - b_k) over ||x||^2 <= power; returns (x, r, mu, lam)."""
    norms = np.linalg.norm(A, axis=1)
    live = norms > 1e-14 * max(norms.max(), 1e-300)
    cap = float((-b[~live]).min()) if (~live).any() else np.inf
    mu = np.zeros(A.shape[0])
    if not live.any():
        x = _project_ball(np.array(x0, dtype=float), power)
        return x, cap, mu, 0.0
    x, nu, found = kernels.maxmin_ball(A[live], b[live], float(power))
    if found:
        x = x * np.sqrt(power / (x @ x))
        total = nu.sum()
        mu[live] = nu / total
        lam = 1.0 / (2.0 * total)
    else:  # interior optimum, not reached in practice from a feasible SCA point
        x, _ = maxmin_ball_bisection(A[live], b[live], power, x0)
        lam = 0.0
    r = min(float((A[live] @ x - b[live]).min()), cap)
    return x, r, mu, lam


def solve_sca_subproblem(channels, noise, w_q, P, full=False):
    """One linearised max-min step around ``w_q``.

    Returns ``(w, r)``; with ``full=True`` also the constraint multipliers
    ``mu`` (summing to one) and the ball multiplier ``lam``.
    """
    H, noise = _as_channels(channels, noise)
    w_q = _weights(w_q)
    if H.shape[1] != w_q.shape[0]:
        raise DimensionMismatchError("w_q length differs from channel length")
    assert np.vdot(w_q, w_q).real <= P * (1 + POWER_SLACK), "w_q outside the power ball"
    hs = H / np.sqrt(noise)[:, None]
    A, b = _surrogate_rows(hs, w_q)
    x, r, mu, lam = _solve_real(A, b, P, _to_real(w_q))
    w = _to_complex(x)
    if full:
        return w, r, mu, lam
    return w, r


def surrogate_values(channels, noise, w_q, w) -> np.ndarray:
    H, noise = _as_channels(channels, noise)
    hs = H / np.sqrt(noise)[:, None]
    A, b = _surrogate_rows(hs, _weights(w_q))
    return A @ _to_real(_weights(w)) - b


# ---------------------------------------------------------------------------
# SCA driver
# ---------------------------------------------------------------------------


def weakest_user_mrt(channels, noise, P) -> np.ndarray:
    H, noise = _as_channels(channels, noise)
    k = int(np.argmin((np.abs(H) ** 2).sum(axis=1) / noise))
    nrm = np.linalg.norm(H[k])
    if nrm == 0.0:
        raise ValueError("weakest user has an all-zero channel")
    return np.sqrt(P) * H[k] / nrm


def _sca_loop(hs, P, w0, eps, max_iter):
    w = w0.copy()
    snr = float((np.abs(hs.conj() @ w) ** 2).min())
    trace = [snr]
    for _ in range(max_iter):
        A, b = _surrogate_rows(hs, w)
        x, _, _, _ = _solve_real(A, b, P, _to_real(w))
        w_new = _to_complex(x)
        snr_new = float((np.abs(hs.conj() @ w_new) ** 2).min())
        if snr_new < snr:  # rounding only; keep the monotone iterate
            break
        gain = (snr_new - snr) / snr if snr > 0 else np.inf
        w, snr = w_new, snr_new
        trace.append(snr)
        if gain < eps:
            break
    return w, np.array(trace)


def sca_beamform(channels, noise, P, w0=None, eps=1e-4, max_iter=50) -> ScaResult:
    """Iterate the linearised subproblem until the fractional min-SNR gain drops below ``eps``."""
    H, noise = _as_channels(channels, noise)
    w0 = weakest_user_mrt(H, noise, P) if w0 is None else _weights(w0).astype(complex)
    if not np.any(w0):
        raise ValueError("initial beamformer must be nonzero")
    if np.vdot(w0, w0).real > P * (1 + POWER_SLACK):
        raise ValueError("initial beamformer violates the power budget")
    hs = H / np.sqrt(noise)[:, None]
    w, trace = _sca_loop(hs, P, w0, eps, max_iter)
    return ScaResult(Beamformer(w, P), trace)


def sca_beamform_subspace(channels, noise, P, eps=1e-4, max_iter=50, ridge=1e-12) -> SubspaceResult:
    """SCA over w = sum_k eta_k h_k, whitened through the K x K Gram matrix."""
    H, noise = _as_channels(channels, noise)
    if not np.any(H):
        raise ValueError("all channel vectors are zero")
    K = H.shape[0]
    gram = H.conj() @ H.T  # gram[i, j] = h_i^H h_j
    gram = gram + ridge * np.trace(gram).real * np.eye(K)
    L = np.linalg.cholesky(gram)
    # h_k^H (H^T eta) = (gram eta)_k = (L^H e_k)^H z with z = L^H eta
    eff = L.conj()  # row k is (L^H e_k)^T
    hs = eff / np.sqrt(noise)[:, None]
    j = int(np.argmin((np.abs(H) ** 2).sum(axis=1) / noise))
    eta0 = np.zeros(K, dtype=complex)
    eta0[j] = np.sqrt(P) / np.linalg.norm(H[j])
    z0 = L.conj().T @ eta0
    z0 *= min(1.0, np.sqrt(P / np.vdot(z0, z0).real))
    z, _ = _sca_loop(hs, P, z0, eps, max_iter)
    eta = np.linalg.solve(L.conj().T, z)
    w = H.T @ eta
    excess = np.vdot(w, w).real / P
    if excess > 1.0:
        w, eta = w / np.sqrt(excess), eta / np.sqrt(excess)
    return SubspaceResult(Beamformer(w, P), SubspaceCoefficients(eta))


def trace_rows(trace):
    """(iteration, r, rate) rows for a convergence CSV."""
    return [(q, float(r), float(np.log2(1.0 + r))) for q, r in enumerate(trace)]
