"""Predictor-corrector path tracking along straight segments of the t-line.

The tracker follows ``t(s) = (1 - s) t_a + s t_b`` for ``s`` in [0, 1]. The
predictor is a classical RK4 step on the Davidenko equation
``J_x dx/ds = -dF/dt (t_b - t_a)``; the corrector is Newton's method at the
predicted ``t``. A step is accepted only if Newton converges within
``newton_max_iters`` iterations.

All paths of a batch advance together through numpy, but every path keeps
its own arc position, step size and success streak, so the outcome of a path
does not depend on what else is in the batch.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import CurveSystem

__all__ = [
    "TrackerConfig",
    "PathResult",
    "NewtonError",
    "MIN_STEP_UNDERFLOW",
    "MAX_STEPS",
    "CORRECTOR_DIVERGENCE",
    "NONFINITE_VALUE",
    "newton_refine",
    "track_segment",
    "track_batch",
]

MIN_STEP_UNDERFLOW = "min-step-underflow"
MAX_STEPS = "max-steps"
CORRECTOR_DIVERGENCE = "corrector-divergence"
NONFINITE_VALUE = "nonfinite-value"

SINGULAR_JACOBIAN = "singular-jacobian"
NO_CONVERGENCE = "no-convergence"


@dataclass(frozen=True)
class TrackerConfig:
    initial_step: float = 0.05
    min_step: float = 1e-7
    max_step: float = 0.1
    corrector_tol: float = 1e-9
    newton_max_iters: int = 3
    step_shrink: float = 0.5
    step_grow: float = 2.0
    grow_after: int = 5
    max_steps: int = 100_000

    def __post_init__(self):
        if not (0 < self.min_step <= self.initial_step <= self.max_step <= 1):
            raise ValueError("need 0 < min_step <= initial_step <= max_step <= 1")
        if self.corrector_tol <= 0:
            raise ValueError("corrector_tol must be positive")
        if not (0 < self.step_shrink < 1) or self.step_grow <= 1:
            raise ValueError("need 0 < step_shrink < 1 < step_grow")
        if self.newton_max_iters < 1 or self.grow_after < 1 or self.max_steps < 1:
            raise ValueError("iteration counts must be positive")


@dataclass(frozen=True)
class PathResult:
    endpoint: np.ndarray | None
    reason: str | None
    steps_taken: int

    @property
    def success(self) -> bool:
        return self.reason is None

    @classmethod
    def failure(cls, reason: str, steps_taken: int = 0) -> PathResult:
        return cls(None, reason, steps_taken)


class NewtonError(ArithmeticError):
    def __init__(self, reason: str, message: str = ""):
        super().__init__(message or reason)
        self.reason = reason


def _solve(J: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Batched LU solve; rows with a singular matrix come back as NaN."""
    try:
        return np.linalg.solve(J, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full(rhs.shape, np.nan, dtype=complex)
        for i in range(J.shape[0]):
            try:
                out[i] = np.linalg.solve(J[i], rhs[i])
            except np.linalg.LinAlgError:
                pass
        return out


def _inf_norm(A: np.ndarray) -> np.ndarray:
    return np.max(np.abs(A), axis=-1, initial=0.0)


def _newton(comp, X: np.ndarray, T: np.ndarray, tol: float, max_iters: int):
    """Batched Newton iteration.

    Converged means the last correction is below ``tol * max(1, |x|)`` and the
    residual at the corrected point is below ``tol`` (max norms). At least one
    correction is always applied. Returns the iterates, a converged mask, a
    singular mask, and the number of corrections applied per path.
    """
    X = np.array(X, dtype=complex, copy=True)
    P = X.shape[0]
    converged = np.zeros(P, dtype=bool)
    singular = np.zeros(P, dtype=bool)
    iters = np.zeros(P, dtype=np.int64)
    live = np.arange(P)
    last_dx = np.full(P, np.inf)
    for it in range(max_iters + 1):
        if live.size == 0:
            break
        F, J, _ = comp.full(X[live], T[live])
        res = _inf_norm(F)
        if it > 0:
            scale = np.maximum(1.0, _inf_norm(X[live]))
            done = (res < tol) & (last_dx[live] < tol * scale)
            converged[live[done]] = True
            live, F, J = live[~done], F[~done], J[~done]
        if it == max_iters or live.size == 0:
            break
        dx = _solve(J, F)
        bad = ~np.all(np.isfinite(dx), axis=1)
        singular[live[bad]] = True
        live, dx = live[~bad], dx[~bad]
        X[live] -= dx
        last_dx[live] = _inf_norm(dx)
        iters[live] += 1
    return X, converged, singular, iters


def newton_refine(curve: CurveSystem, x, t: complex, tol: float = 1e-9, max_iters: int = 10) -> np.ndarray:
    """Refine ``x`` to a root of ``F(., t)``; raises :class:`NewtonError` on failure."""
    x = np.asarray(x, dtype=complex).reshape(1, -1)
    if x.shape[1] != curve.n:
        raise ValueError(f"point has dimension {x.shape[1]}, expected {curve.n}")
    if not np.all(np.isfinite(x)):
        raise NewtonError(NONFINITE_VALUE)
    X, conv, sing, _ = _newton(curve.compiled, x, np.array([complex(t)]), tol, max_iters)
    if sing[0]:
        raise NewtonError(SINGULAR_JACOBIAN, "Jacobian is singular")
    if not conv[0]:
        raise NewtonError(NO_CONVERGENCE, f"no convergence in {max_iters} iterations")
    return X[0]


def _rk4_direction(comp, X, T, dt):
    _, J, Ft = comp.full(X, T)
    return -_solve(J, Ft * dt[:, None])


def _track_core(curve: CurveSystem, X0: np.ndarray, t_a: complex, t_b: complex, cfg: TrackerConfig) -> list[PathResult]:
    comp = curve.compiled
    P = X0.shape[0]
    results: list[PathResult | None] = [None] * P
    t_a, t_b = complex(t_a), complex(t_b)
    if P == 0:
        return []
    if not (np.isfinite(t_a) and np.isfinite(t_b)):
        return [PathResult.failure(NONFINITE_VALUE) for _ in range(P)]

    finite = np.all(np.isfinite(X0), axis=1)
    for i in np.flatnonzero(~finite):
        results[i] = PathResult.failure(NONFINITE_VALUE)
    idx = np.flatnonzero(finite)
    X, conv, sing, _ = _newton(comp, X0[idx], np.full(idx.size, t_a), cfg.corrector_tol, cfg.newton_max_iters)
    for j in np.flatnonzero(~conv):
        results[idx[j]] = PathResult.failure(CORRECTOR_DIVERGENCE)
    idx, X = idx[conv], X[conv]

    if t_a == t_b:
        for j, i in enumerate(idx):
            results[i] = PathResult(X[j].copy(), None, 0)
        return results

    dt_full = t_b - t_a
    m = idx.size
    s = np.zeros(m)
    h = np.full(m, cfg.initial_step)
    streak = np.zeros(m, dtype=np.int64)
    accepted = np.zeros(m, dtype=np.int64)
    attempts = np.zeros(m, dtype=np.int64)
    active = np.ones(m, dtype=bool)

    while True:
        a = np.flatnonzero(active)
        if a.size == 0:
            break
        xa = X[a]
        sa = s[a]
        ha = np.minimum(h[a], 1.0 - sa)
        dt = np.full(a.size, dt_full)
        t0 = t_a + sa * dt_full
        thalf = t_a + (sa + ha / 2) * dt_full
        s1 = sa + ha
        t1 = np.where(s1 >= 1.0, t_b, t_a + s1 * dt_full)

        k1 = _rk4_direction(comp, xa, t0, dt)
        k2 = _rk4_direction(comp, xa + (ha / 2)[:, None] * k1, thalf, dt)
        k3 = _rk4_direction(comp, xa + (ha / 2)[:, None] * k2, thalf, dt)
        k4 = _rk4_direction(comp, xa + ha[:, None] * k3, t1, dt)
        xp = xa + (ha / 6)[:, None] * (k1 + 2 * k2 + 2 * k3 + k4)

        ok_pred = np.all(np.isfinite(xp), axis=1)
        xc = xp.copy()
        conv = np.zeros(a.size, dtype=bool)
        if ok_pred.any():
            p = np.flatnonzero(ok_pred)
            xc[p], conv[p], _, _ = _newton(comp, xp[p], t1[p], cfg.corrector_tol, cfg.newton_max_iters)
        conv &= np.all(np.isfinite(xc), axis=1)
        attempts[a] += 1

        good = a[conv]
        X[good] = xc[conv]
        s[good] = np.where(s1[conv] >= 1.0, 1.0, s1[conv])
        accepted[good] += 1
        streak[good] += 1
        grow = good[streak[good] >= cfg.grow_after]
        h[grow] = np.minimum(h[grow] * cfg.step_grow, cfg.max_step)
        streak[grow] = 0

        bad = a[~conv]
        h[bad] *= cfg.step_shrink
        streak[bad] = 0

        for j in good[s[good] >= 1.0]:
            results[idx[j]] = PathResult(X[j].copy(), None, int(accepted[j]))
            active[j] = False
        for j in bad[h[bad] < cfg.min_step]:
            results[idx[j]] = PathResult.failure(MIN_STEP_UNDERFLOW, int(accepted[j]))
            active[j] = False
        for j in a[(attempts[a] >= cfg.max_steps) & active[a]]:
            results[idx[j]] = PathResult.failure(MAX_STEPS, int(accepted[j]))
            active[j] = False
    return results


def track_segment(curve: CurveSystem, x_start, t_a: complex, t_b: complex, cfg: TrackerConfig | None = None) -> PathResult:
    cfg = cfg or TrackerConfig()
    x = np.asarray(x_start, dtype=complex).reshape(1, -1)
    if x.shape[1] != curve.n:
        raise ValueError(f"point has dimension {x.shape[1]}, expected {curve.n}")
    return _track_core(curve, x, t_a, t_b, cfg)[0]


def track_batch(
    curve: CurveSystem,
    points: Sequence,
    t_a: complex,
    t_b: complex,
    cfg: TrackerConfig | None = None,
    threads: int = 1,
) -> list[PathResult]:
    """Track independent paths; results follow input order.

    With ``threads > 1`` the batch is cut into contiguous chunks that run on a
    thread pool (numpy's linear algebra releases the GIL).
    """
    cfg = cfg or TrackerConfig()
    if len(points) == 0:
        return []
    X = np.array([np.asarray(p, dtype=complex).reshape(-1) for p in points])
    if X.ndim != 2 or X.shape[1] != curve.n:
        raise ValueError(f"points must have dimension {curve.n}")
    if threads <= 1 or X.shape[0] < 2 * threads:
        return _track_core(curve, X, t_a, t_b, cfg)
    chunks = np.array_split(np.arange(X.shape[0]), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: _track_core(curve, X[c], t_a, t_b, cfg), chunks))
    return [r for part in parts for r in part]
