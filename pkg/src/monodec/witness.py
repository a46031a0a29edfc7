"""Witness sets of the projection to the t-line, alpha-maps and factor witness sets.

An alpha-map ``(g_1(x), ..., g_l(x))`` (the ``t`` coordinate is implicit)
groups fiber points into classes of equal image. When the monodromy group
is imprimitive with these classes as blocks, an alpha-factor is one class and
a beta-factor is one representative per class.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import CompiledSystem, CurveSystem, Polynomial

__all__ = [
    "DEFAULT_POINT_TOL",
    "NonUniformPartitionError",
    "PointRegistry",
    "WitnessSet",
    "AlphaMap",
    "AlphaFactor",
    "BetaFactor",
    "APPEND_A",
    "APPEND_B",
    "APPEND_BOTH",
    "DISCARD",
    "alpha_image",
    "alpha_equivalent",
    "points_equal",
    "classify_endpoint",
    "partition_by_alpha",
    "decomposition_degrees",
    "multi_factor_classify",
    "MultiFactorResult",
]

DEFAULT_POINT_TOL = 1e-6

APPEND_A = "append-to-A"
APPEND_B = "append-to-B"
APPEND_BOTH = "append-to-both"
DISCARD = "discard"


class NonUniformPartitionError(ValueError):
    """Alpha-classes of a fiber have unequal sizes."""


def points_equal(p, q, tol: float = DEFAULT_POINT_TOL) -> bool:
    """Componentwise test ``|p_i - q_i| <= tol * max(1, |p_i|, |q_i|)``."""
    p = np.asarray(p, dtype=complex).reshape(-1)
    q = np.asarray(q, dtype=complex).reshape(-1)
    if p.shape != q.shape:
        raise ValueError("dimension mismatch")
    scale = np.maximum(1.0, np.maximum(np.abs(p), np.abs(q)))
    return bool(np.all(np.abs(p - q) <= tol * scale))


class PointRegistry:
    """Tolerance-based set of points in C^dim.

    A random complex linear functional (the general coordinate) screens
    candidates before the full componentwise comparison; it never decides
    equality on its own.
    """

    def __init__(self, dim: int, tol: float = DEFAULT_POINT_TOL, rng: np.random.Generator | None = None):
        if tol <= 0:
            raise ValueError("tolerance must be positive")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.dim = dim
        self.tol = tol
        self.general_coordinate = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        self._l1 = float(np.sum(np.abs(self.general_coordinate)))
        self._coords = np.empty((16, dim), dtype=complex)
        self._gen = np.empty(16, dtype=complex)
        self._mag = np.empty(16)
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def __iter__(self):
        for i in range(self._size):
            yield self._coords[i].copy()

    def __getitem__(self, i: int) -> np.ndarray:
        if not -self._size <= i < self._size:
            raise IndexError(i)
        return self._coords[i % self._size].copy()

    def __contains__(self, p) -> bool:
        return self.find(p) is not None

    @property
    def points(self) -> np.ndarray:
        return self._coords[: self._size].copy()

    def _as_point(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=complex).reshape(-1)
        if p.shape[0] != self.dim:
            raise ValueError(f"point has dimension {p.shape[0]}, expected {self.dim}")
        return p

    def find(self, p) -> int | None:
        """Index of the first stored point equal to ``p``, or None."""
        p = self._as_point(p)
        n = self._size
        if n == 0:
            return None
        g = p @ self.general_coordinate if self.dim else 0j
        mag = float(np.max(np.abs(p), initial=0.0))
        bound = self.tol * self._l1 * np.maximum(1.0, np.maximum(self._mag[:n], mag))
        cand = np.flatnonzero(np.abs(self._gen[:n] - g) <= bound * (1 + 1e-12) + 1e-300)
        if cand.size == 0:
            return None
        stored = self._coords[cand]
        scale = np.maximum(1.0, np.maximum(np.abs(stored), np.abs(p)))
        hit = np.all(np.abs(stored - p) <= self.tol * scale, axis=1)
        hits = cand[hit]
        return int(hits[0]) if hits.size else None

    def add(self, p) -> tuple[int, bool]:
        """Insert ``p`` unless an equal point is stored; returns (index, inserted)."""
        p = self._as_point(p)
        found = self.find(p)
        if found is not None:
            return found, False
        if self._size == self._coords.shape[0]:
            cap = 2 * self._coords.shape[0]
            self._coords = np.resize(self._coords, (cap, self.dim))
            self._gen = np.resize(self._gen, cap)
            self._mag = np.resize(self._mag, cap)
        i = self._size
        self._coords[i] = p
        self._gen[i] = p @ self.general_coordinate if self.dim else 0j
        self._mag[i] = float(np.max(np.abs(p), initial=0.0))
        self._size += 1
        return i, True


@dataclass(frozen=True)
class WitnessSet:
    """Equations, a general base value ``q`` of t, and points of the fiber over ``q``."""

    curve: CurveSystem
    base: complex
    points: tuple[np.ndarray, ...]
    degree: int | None = None
    tol: float = 1e-8
    point_tol: float = DEFAULT_POINT_TOL

    def __post_init__(self):
        pts = tuple(np.asarray(p, dtype=complex).reshape(-1) for p in self.points)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "base", complex(self.base))
        if pts:
            X = np.array(pts)
            if X.shape[1] != self.curve.n:
                raise ValueError("witness point dimension does not match the curve")
            res = np.max(np.abs(self.curve.compiled.residuals(X, self.base)), axis=1)
            worst = int(np.argmax(res))
            if res[worst] >= self.tol:
                raise ValueError(f"witness point {worst} has residual {res[worst]:.3g} >= {self.tol:g}")
            reg = PointRegistry(self.curve.n, self.point_tol)
            for i, p in enumerate(pts):
                if not reg.add(p)[1]:
                    raise ValueError(f"witness point {i} duplicates an earlier point")
        if self.degree is not None and len(pts) > self.degree:
            raise ValueError(f"{len(pts)} points exceed the fiber degree {self.degree}")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def is_complete(self) -> bool:
        return self.degree is not None and len(self.points) == self.degree

    def array(self) -> np.ndarray:
        return np.array(self.points).reshape(len(self.points), self.curve.n)


class AlphaMap:
    """The map ``x -> (g_1(x), ..., g_l(x))``; ``t`` is carried along implicitly.

    ``names`` are the coordinates the components are written in: the curve's
    x variables for a map applied to fiber points, or image coordinates of a
    previous map when used inside a chain.
    """

    def __init__(self, components: Sequence[Polynomial], names: Sequence[str] | None = None):
        components = tuple(components)
        if names is None:
            if not components:
                raise ValueError("an alpha-map without components needs explicit names")
            names = components[0].names
        self.names = tuple(names)
        if "t" in self.names:
            raise ValueError("alpha components may only mention x variables")
        self.components = tuple(g if g.names == self.names else g.reorder(self.names) for g in components)
        self._compiled: CompiledSystem | None = None

    def __len__(self) -> int:
        return len(self.components)

    def images(self, X) -> np.ndarray:
        """Images of a batch of points, shape (P, l)."""
        X = np.asarray(X, dtype=complex)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != len(self.names):
            raise ValueError(f"points have dimension {X.shape[1]}, expected {len(self.names)}")
        if not self.components:
            return np.zeros((X.shape[0], 0), dtype=complex)
        if self._compiled is None:
            # t is appended with exponent zero so the compiled evaluator can be reused
            names = self.names + ("t",)
            comps = [g.reorder(names) for g in self.components]
            self._compiled = CompiledSystem(comps, len(self.names), derivatives=False)
        return self._compiled.residuals(X, 0.0)

    def compose(self, inner: AlphaMap) -> AlphaMap:
        """The map ``x -> self(inner(x))``; ``self.names`` index inner's image coordinates."""
        if len(self.names) != len(inner.components):
            raise ValueError("chain does not compose: coordinate counts differ")
        mapping = dict(zip(self.names, inner.components))
        return AlphaMap([g.substitute(mapping, inner.names) for g in self.components], names=inner.names)

    def __repr__(self):
        return f"AlphaMap({list(self.components)!r})"


def alpha_image(alpha: AlphaMap, p) -> np.ndarray:
    return alpha.images(np.asarray(p, dtype=complex).reshape(1, -1))[0]


def alpha_equivalent(alpha: AlphaMap, p, q, tol: float = DEFAULT_POINT_TOL) -> bool:
    return points_equal(alpha_image(alpha, p), alpha_image(alpha, q), tol)


@dataclass(frozen=True)
class AlphaFactor:
    """Points sharing a single alpha-image."""

    points: tuple[np.ndarray, ...]
    alpha: AlphaMap | None = field(default=None, compare=False)

    def check(self, tol: float = DEFAULT_POINT_TOL) -> bool:
        if len(self.points) < 2 or self.alpha is None:
            return True
        imgs = self.alpha.images(np.array(self.points))
        return all(points_equal(imgs[0], im, tol) for im in imgs[1:])

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class BetaFactor:
    """Points with pairwise distinct alpha-images."""

    points: tuple[np.ndarray, ...]
    alpha: AlphaMap | None = field(default=None, compare=False)

    def check(self, tol: float = DEFAULT_POINT_TOL) -> bool:
        if self.alpha is None:
            return True
        imgs = self.alpha.images(np.array(self.points)) if self.points else []
        return all(
            not points_equal(imgs[i], imgs[j], tol) for i in range(len(imgs)) for j in range(i + 1, len(imgs))
        )

    def __len__(self):
        return len(self.points)


def _decide(to_a: bool, to_b: bool) -> str:
    if to_a and to_b:
        return APPEND_BOTH
    if to_a:
        return APPEND_A
    if to_b:
        return APPEND_B
    return DISCARD


def classify_endpoint(e, A: Sequence, B: Sequence, a_rep, alpha: AlphaMap, tol: float = DEFAULT_POINT_TOL) -> str:
    """Decide what the decomposable monodromy step does with endpoint ``e``.

    ``e`` joins A when A is nonempty, ``e`` is not already in A and shares the
    representative's alpha-image; it joins B when B is nonempty and its
    alpha-image is not among those of B. Both may apply.
    """
    A = [np.asarray(p, dtype=complex) for p in A]
    B = [np.asarray(p, dtype=complex) for p in B]
    if bool(A) != (a_rep is not None):
        raise ValueError("a representative must be given exactly when A is nonempty")
    img = alpha_image(alpha, e)
    to_a = False
    if A:
        to_a = not any(points_equal(e, p, tol) for p in A) and points_equal(img, alpha_image(alpha, a_rep), tol)
    to_b = False
    if B:
        imgs_b = alpha.images(np.array(B))
        to_b = not any(points_equal(img, im, tol) for im in imgs_b)
    return _decide(to_a, to_b)


def _group(images: np.ndarray, tol: float) -> list[list[int]]:
    reg = PointRegistry(images.shape[1], tol, rng=np.random.default_rng(12345))
    blocks: list[list[int]] = []
    for i, im in enumerate(images):
        j, new = reg.add(im)
        if new:
            blocks.append([i])
        else:
            blocks[j].append(i)
    return blocks


def _points_of(W) -> np.ndarray:
    if isinstance(W, WitnessSet):
        return W.array()
    return np.array([np.asarray(p, dtype=complex).reshape(-1) for p in W])


def partition_by_alpha(W: WitnessSet | Sequence, alpha: AlphaMap, tol: float = DEFAULT_POINT_TOL) -> list[list[int]]:
    """Blocks of point indices with equal alpha-image, in order of first appearance."""
    X = _points_of(W)
    if X.size == 0:
        return []
    return _group(alpha.images(X), tol)


def _uniform_size(blocks: Sequence[Sequence], what: str) -> int:
    sizes = {len(b) for b in blocks}
    if len(sizes) != 1:
        raise NonUniformPartitionError(f"{what} class sizes are not uniform: {sorted(sizes)}")
    return sizes.pop()


def decomposition_degrees(W: WitnessSet | Sequence, alpha: AlphaMap, tol: float = DEFAULT_POINT_TOL) -> tuple[int, int]:
    """Return ``(deg alpha, deg beta)`` as observed on a complete witness set."""
    blocks = partition_by_alpha(W, alpha, tol)
    if not blocks:
        raise ValueError("empty witness set")
    a = _uniform_size(blocks, "alpha")
    return a, len(blocks)


@dataclass(frozen=True)
class MultiFactorResult:
    partitions: tuple[tuple[tuple[int, ...], ...], ...]
    degrees: tuple[int, ...]


def multi_factor_classify(
    W: WitnessSet | Sequence, chain: Sequence[AlphaMap], tol: float = DEFAULT_POINT_TOL
) -> MultiFactorResult:
    """Refinement tower of partitions for a chain of maps applied in order.

    ``chain[0]`` is written in the x variables and each later map in the
    image coordinates of its predecessor. Level ``i`` groups points by the
    composite of the first ``i + 1`` maps. The degree of level 0 is the class
    size; the degree of level ``i`` is how many level ``i - 1`` classes each
    level ``i`` class contains. When the last composite still separates the
    fiber, a final level for the projection to t (a single class) is added.
    """
    if not chain:
        raise ValueError("empty chain")
    X = _points_of(W)
    composites = [chain[0]]
    for g in chain[1:]:
        composites.append(g.compose(composites[-1]))
    partitions = [_group(c.images(X), tol) for c in composites]
    if len(partitions[-1]) > 1:
        partitions.append([list(range(len(X)))])

    degrees = [_uniform_size(partitions[0], "level 0")]
    for lvl in range(1, len(partitions)):
        owner = {}
        for ci, block in enumerate(partitions[lvl]):
            for i in block:
                owner[i] = ci
        counts: dict[int, set[int]] = {}
        for cj, block in enumerate(partitions[lvl - 1]):
            parents = {owner[i] for i in block}
            if len(parents) != 1:
                raise NonUniformPartitionError(f"level {lvl} does not coarsen level {lvl - 1}")
            counts.setdefault(parents.pop(), set()).add(cj)
        degrees.append(_uniform_size(list(counts.values()), f"level {lvl}"))
    frozen = tuple(tuple(tuple(b) for b in part) for part in partitions)
    return MultiFactorResult(frozen, tuple(degrees))
