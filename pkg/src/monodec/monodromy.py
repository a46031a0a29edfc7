"""Monodromy loops in the t-line and the two collection algorithms.

``standard_monodromy`` transports its whole partial witness set around
random loops and keeps every new endpoint. ``decomposable_monodromy`` only
transports ``(A \\ B) | B`` and keeps endpoints that either extend the
alpha-factor A or carry an alpha-image not yet represented in the
beta-factor B.

Each loop runs in two phases: every path is tracked first, then endpoints
are classified one at a time against the registries.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import CurveSystem
from .tracking import TrackerConfig, _newton, track_batch
from .witness import (
    APPEND_A,
    APPEND_B,
    APPEND_BOTH,
    DEFAULT_POINT_TOL,
    AlphaFactor,
    AlphaMap,
    BetaFactor,
    PointRegistry,
    WitnessSet,
    _decide,
    points_equal,
)

__all__ = [
    "LoopSpec",
    "StoppingCriterion",
    "Permutation",
    "RunStats",
    "LoopResult",
    "random_loop",
    "monodromy_loop",
    "standard_monodromy",
    "decomposable_monodromy",
    "collect_generators",
    "is_transitive",
    "default_radius",
]

PointFilter = Callable[[np.ndarray], bool]


@dataclass(frozen=True)
class LoopSpec:
    """Closed piecewise-linear loop ``w_0 -> w_1 -> ... -> w_r = w_0``."""

    waypoints: tuple[complex, ...]

    def __post_init__(self):
        w = tuple(complex(z) for z in self.waypoints)
        if len(w) < 2 or w[0] != w[-1]:
            raise ValueError("a loop must start and end at the base point")
        if len(w) > 2 and any(a == b for a, b in zip(w, w[1:])):
            raise ValueError("consecutive waypoints must differ")
        object.__setattr__(self, "waypoints", w)

    @property
    def base(self) -> complex:
        return self.waypoints[0]

    def segments(self):
        return list(zip(self.waypoints, self.waypoints[1:]))


@dataclass(frozen=True)
class StoppingCriterion:
    """Stop when any finite bound is met.

    ``target_count`` applies to the collected set (standard mode) or to B
    (decomposable mode, A when B is unused). ``stabilization`` counts
    consecutive loops that added nothing.
    """

    max_loops: int | None = 200
    target_count: int | None = None
    stabilization: int | None = 10

    def __post_init__(self):
        if self.max_loops is None and self.target_count is None and self.stabilization is None:
            raise ValueError("at least one stopping bound must be finite")

    def fired(self, loops: int, count: int, idle: int) -> bool:
        if self.max_loops is not None and loops >= self.max_loops:
            return True
        if self.target_count is not None and count >= self.target_count:
            return True
        if self.stabilization is not None and idle >= self.stabilization:
            return True
        return False


@dataclass(frozen=True)
class Permutation:
    """Partial map from start indices to endpoint indices (None where undefined)."""

    mapping: tuple[int | None, ...]

    def __len__(self):
        return len(self.mapping)

    @property
    def is_total(self) -> bool:
        return all(j is not None for j in self.mapping)

    @property
    def is_bijection(self) -> bool:
        return self.is_total and sorted(self.mapping) == list(range(len(self.mapping)))

    @property
    def is_identity(self) -> bool:
        return all(j == i for i, j in enumerate(self.mapping))

    def __call__(self, i: int) -> int | None:
        return self.mapping[i]

    def cycles(self) -> list[tuple[int, ...]]:
        if not self.is_bijection:
            raise ValueError("cycles are only defined for bijections")
        seen, out = set(), []
        for i in range(len(self.mapping)):
            if i in seen:
                continue
            cyc = [i]
            seen.add(i)
            j = self.mapping[i]
            while j != i:
                cyc.append(j)
                seen.add(j)
                j = self.mapping[j]
            out.append(tuple(cyc))
        return out


@dataclass
class RunStats:
    loops_taken: int = 0
    paths_tracked: int = 0
    path_failures: int = 0
    points_found: int = 0
    classes_found: int = 0
    wall_time: float = 0.0

    def as_row(self) -> dict:
        return {
            "loops_taken": self.loops_taken,
            "paths_tracked": self.paths_tracked,
            "path_failures": self.path_failures,
            "points_found": self.points_found,
            "classes_found": self.classes_found,
            "wall_ms": round(self.wall_time * 1000.0, 3),
        }


@dataclass
class LoopResult:
    endpoints: list[np.ndarray]
    origins: list[int]
    permutation: Permutation
    paths: int
    failures: int


LOOP_SCALE = 8.0


def default_radius(q: complex) -> float:
    return LOOP_SCALE * max(1.0, abs(q))


def random_loop(q: complex, rng: np.random.Generator, radius: float | None = None) -> LoopSpec:
    """Triangle ``q -> w1 -> w2 -> q`` with w1, w2 uniform in the disk of ``radius`` about q."""
    q = complex(q)
    radius = default_radius(q) if radius is None else float(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    sep = 1e-3 * radius

    def draw():
        r = radius * np.sqrt(rng.uniform())
        return q + r * np.exp(2j * np.pi * rng.uniform())

    w1 = draw()
    while abs(w1 - q) < sep:
        w1 = draw()
    w2 = draw()
    while abs(w2 - q) < sep or abs(w2 - w1) < sep:
        w2 = draw()
    return LoopSpec((q, complex(w1), complex(w2), q))


def _refine_at(curve: CurveSystem, X: np.ndarray, q: complex, cfg: TrackerConfig):
    X, conv, _, _ = _newton(curve.compiled, X, np.full(X.shape[0], complex(q)), cfg.corrector_tol, cfg.newton_max_iters)
    return X, conv


def monodromy_loop(
    curve: CurveSystem,
    points: Sequence,
    loop: LoopSpec,
    cfg: TrackerConfig | None = None,
    *,
    accept: PointFilter | None = None,
    point_tol: float = DEFAULT_POINT_TOL,
    threads: int = 1,
) -> LoopResult:
    """Transport ``points`` once around ``loop``.

    Failed paths (and endpoints rejected by ``accept``) are dropped and
    counted. The permutation maps start index ``i`` to the index of the start
    point its endpoint coincides with, or None.
    """
    cfg = cfg or TrackerConfig()
    pts = [np.asarray(p, dtype=complex).reshape(-1) for p in points]
    origins = list(range(len(pts)))
    current = pts
    for t_a, t_b in loop.segments():
        if not current:
            break
        results = track_batch(curve, current, t_a, t_b, cfg, threads=threads)
        keep = [k for k, r in enumerate(results) if r.success]
        origins = [origins[k] for k in keep]
        current = [results[k].endpoint for k in keep]
    endpoints: list[np.ndarray] = []
    kept: list[int] = []
    if current:
        X, conv = _refine_at(curve, np.array(current), loop.base, cfg)
        for k in range(len(current)):
            if conv[k] and (accept is None or accept(X[k])):
                endpoints.append(X[k])
                kept.append(origins[k])
    reg = PointRegistry(curve.n, point_tol)
    for p in pts:
        reg.add(p)
    mapping: list[int | None] = [None] * len(pts)
    for i, e in zip(kept, endpoints):
        mapping[i] = reg.find(e)
    return LoopResult(endpoints, kept, Permutation(tuple(mapping)), len(pts), len(pts) - len(endpoints))


def _verified(curve: CurveSystem, p: np.ndarray, q: complex, tol: float) -> bool:
    return bool(np.all(np.isfinite(p))) and curve.residual_norm(p, q) < tol


def _count_classes(alpha: AlphaMap | None, points: Sequence, tol: float) -> int:
    if alpha is None or not points:
        return 0
    reg = PointRegistry(len(alpha), tol)
    for im in alpha.images(np.array(points)):
        reg.add(im)
    return len(reg)


def standard_monodromy(
    curve: CurveSystem,
    base: complex,
    start: Sequence,
    stop: StoppingCriterion | None = None,
    cfg: TrackerConfig | None = None,
    rng: np.random.Generator | None = None,
    *,
    alpha: AlphaMap | None = None,
    radius: float | None = None,
    accept: PointFilter | None = None,
    point_tol: float = DEFAULT_POINT_TOL,
    threads: int = 1,
    degree: int | None = None,
) -> tuple[WitnessSet, RunStats]:
    """Populate a fiber from a nonempty partial witness point set.

    ``alpha`` is only used to report the number of alpha-classes among the
    collected points.
    """
    stop = stop or StoppingCriterion()
    cfg = cfg or TrackerConfig()
    rng = rng if rng is not None else np.random.default_rng()
    base = complex(base)
    if len(start) == 0:
        raise ValueError("standard monodromy needs at least one start point")
    clock = time.perf_counter()
    reg = PointRegistry(curve.n, point_tol, rng)
    for p in start:
        p = np.asarray(p, dtype=complex).reshape(-1)
        if not _verified(curve, p, base, cfg.corrector_tol * 10):
            raise ValueError("start point does not lie on the fiber over the base point")
        reg.add(p)
    stats = RunStats()
    idle = 0
    while not stop.fired(stats.loops_taken, len(reg), idle):
        loop = random_loop(base, rng, radius)
        res = monodromy_loop(curve, reg.points, loop, cfg, accept=accept, point_tol=point_tol, threads=threads)
        stats.loops_taken += 1
        stats.paths_tracked += res.paths
        stats.path_failures += res.failures
        added = 0
        for e in res.endpoints:
            if _verified(curve, e, base, cfg.corrector_tol) and reg.add(e)[1]:
                added += 1
        idle = 0 if added else idle + 1
    points = list(reg.points)
    stats.points_found = len(points)
    stats.classes_found = _count_classes(alpha, points, point_tol)
    stats.wall_time = time.perf_counter() - clock
    W = WitnessSet(curve, base, tuple(points), degree=degree, tol=cfg.corrector_tol * 10, point_tol=point_tol)
    return W, stats


def decomposable_monodromy(
    curve: CurveSystem,
    base: complex,
    A: Sequence,
    B: Sequence,
    alpha: AlphaMap,
    stop: StoppingCriterion | None = None,
    cfg: TrackerConfig | None = None,
    rng: np.random.Generator | None = None,
    *,
    radius: float | None = None,
    accept: PointFilter | None = None,
    point_tol: float = DEFAULT_POINT_TOL,
    threads: int = 1,
) -> tuple[AlphaFactor, BetaFactor, RunStats]:
    """Grow partial alpha- and beta-factors, tracking only ``(A \\ B) | B`` per loop.

    The first element of A is the fixed representative for A's alpha-image.
    An empty A stays empty and an empty B stays empty.
    """
    stop = stop or StoppingCriterion()
    cfg = cfg or TrackerConfig()
    rng = rng if rng is not None else np.random.default_rng()
    base = complex(base)
    if len(A) == 0 and len(B) == 0:
        raise ValueError("decomposable monodromy needs a nonempty A or B")
    clock = time.perf_counter()

    a_reg = PointRegistry(curve.n, point_tol, rng)
    b_reg = PointRegistry(curve.n, point_tol, rng)
    b_images = PointRegistry(len(alpha), point_tol, rng)
    for p in A:
        p = np.asarray(p, dtype=complex).reshape(-1)
        if not _verified(curve, p, base, cfg.corrector_tol * 10):
            raise ValueError("A contains a point off the fiber")
        a_reg.add(p)
    for p in B:
        p = np.asarray(p, dtype=complex).reshape(-1)
        if not _verified(curve, p, base, cfg.corrector_tol * 10):
            raise ValueError("B contains a point off the fiber")
        _, fresh = b_images.add(alpha.images(p)[0])
        if not fresh:
            raise ValueError("B contains two alpha-equivalent points")
        b_reg.add(p)
    a_image = alpha.images(a_reg[0])[0] if len(a_reg) else None

    def start_points():
        pts = [p for p in a_reg if p not in b_reg]
        return pts + list(b_reg)

    def target():
        return len(b_reg) if len(b_reg) else len(a_reg)

    stats = RunStats()
    idle = 0
    while not stop.fired(stats.loops_taken, target(), idle):
        S = start_points()
        loop = random_loop(base, rng, radius)
        res = monodromy_loop(curve, S, loop, cfg, accept=accept, point_tol=point_tol, threads=threads)
        stats.loops_taken += 1
        stats.paths_tracked += res.paths
        stats.path_failures += res.failures
        added = 0
        for e in res.endpoints:
            if not _verified(curve, e, base, cfg.corrector_tol):
                continue
            img = alpha.images(e)[0]
            to_a = len(a_reg) > 0 and e not in a_reg and points_equal(img, a_image, point_tol)
            to_b = len(b_reg) > 0 and img not in b_images
            action = _decide(to_a, to_b)
            if action in (APPEND_A, APPEND_BOTH):
                a_reg.add(e)
                added += 1
            if action in (APPEND_B, APPEND_BOTH):
                b_reg.add(e)
                b_images.add(img)
                added += 1
        idle = 0 if added else idle + 1

    a_pts = tuple(a_reg.points)
    b_pts = tuple(b_reg.points)
    union = PointRegistry(curve.n, point_tol)
    for p in a_pts + b_pts:
        union.add(p)
    stats.points_found = len(union)
    stats.classes_found = len(b_pts) if b_pts else (1 if a_pts else 0)
    stats.wall_time = time.perf_counter() - clock
    return AlphaFactor(a_pts, alpha), BetaFactor(b_pts, alpha), stats


def collect_generators(
    W: WitnessSet,
    loops: int,
    cfg: TrackerConfig | None = None,
    rng: np.random.Generator | None = None,
    *,
    radius: float | None = None,
    threads: int = 1,
) -> list[Permutation]:
    """Monodromy permutations of a complete witness set, one per clean loop.

    Loops with a failed path, or whose endpoints do not match the fiber
    one-to-one, are dropped.
    """
    cfg = cfg or TrackerConfig()
    rng = rng if rng is not None else np.random.default_rng()
    perms = []
    for _ in range(loops):
        loop = random_loop(W.base, rng, radius)
        res = monodromy_loop(W.curve, W.points, loop, cfg, point_tol=W.point_tol, threads=threads)
        if res.failures == 0 and res.permutation.is_bijection:
            perms.append(res.permutation)
    return perms


def is_transitive(perms: Sequence[Permutation], size: int) -> bool:
    """Whether the group generated by ``perms`` has a single orbit on ``range(size)``."""
    parent = list(range(size))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for p in perms:
        for i, j in enumerate(p.mapping):
            if j is not None:
                parent[root(i)] = root(j)
    return len({root(i) for i in range(size)}) == 1
