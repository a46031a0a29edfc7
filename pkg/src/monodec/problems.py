"""Built-in parameterized families, their symmetry groups and closed-form oracles.

Every family is linear in its parameters, which makes seeding trivial: draw
the variables at random and solve for the parameters. The line through the
seed's parameter point has a random complex Gaussian direction, so the seed
sits over ``t = 0`` (the power curve is already a curve in t and is seeded at
``t = -3`` instead).
"""

from __future__ import annotations

import cmath
import itertools
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import CurveSystem, ParameterizedSystem, Polynomial, restrict_to_line
from .tracking import newton_refine
from .witness import AlphaMap, WitnessSet, decomposition_degrees

__all__ = [
    "ProblemInstance",
    "GroupElement",
    "Trichotomy",
    "power_curve",
    "power_curve_roots",
    "cyclic_system",
    "cyclic_parameterized",
    "dihedral_group",
    "reynolds_invariant",
    "classify_invariant_alpha",
    "gaussian_moment_system",
    "mixed_volume_example",
    "make_problem",
    "CATALOG",
    "NONTRIVIAL",
    "FIBER_FIXED",
    "ALPHA_CONSTANT",
]

NONTRIVIAL = "nontrivial-decomposition"
FIBER_FIXED = "fiber-fixed"
ALPHA_CONSTANT = "alpha-constant-on-fiber"

CYCLIC_COUNTS = {5: (70, 7), 6: (156, 13), 7: (924, 66)}


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    system: ParameterizedSystem
    line_base: np.ndarray
    line_direction: np.ndarray
    curve: CurveSystem
    seed_x: np.ndarray
    seed_t: complex
    alpha: AlphaMap | None = None
    known_degree: int | None = None
    known_classes: int | None = None
    loop_radius: float | None = None
    accept: Callable[[np.ndarray], bool] | None = field(default=None, compare=False)

    def __post_init__(self):
        res = self.curve.residual_norm(self.seed_x, self.seed_t)
        if not res < 1e-9:
            raise ValueError(f"seed residual {res:.3g} is not below 1e-9")

    @property
    def base(self) -> complex:
        return complex(self.seed_t)

    def seed_witness(self) -> WitnessSet:
        return WitnessSet(self.curve, self.seed_t, (self.seed_x,), degree=self.known_degree)


def _gauss(rng: np.random.Generator, size=None):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


def _line_through(system: ParameterizedSystem, u_star, rng) -> tuple[np.ndarray, np.ndarray, CurveSystem]:
    u_star = np.asarray(u_star, dtype=complex)
    direction = _gauss(rng, len(system.parameters))
    return u_star, direction, restrict_to_line(system, u_star, direction)


# -- power curve ----------------------------------------------------------


def power_curve(n: int, base: complex = -3.0) -> ProblemInstance:
    """``x^(2n) - 2 x^n + t`` with ``alpha = x^n``; branch points t = 0 and t = 1.

    The seed is the real positive root ``(1 + sqrt(1 - base))^(1/n)`` at ``t = base``
    (principal branches away from the real axis).
    """
    if n < 2:
        raise ValueError("power curve needs n >= 2")
    base = complex(base)
    if abs(base) < 1e-8 or abs(base - 1) < 1e-8:
        raise ValueError("base must avoid the branch points t = 0 and t = 1")
    names = ("x", "t")
    x = Polynomial.variable(names, "x")
    t = Polynomial.variable(names, "t")
    system = ParameterizedSystem(["x"], ["t"], [x ** (2 * n) - 2 * x**n + t])
    curve = restrict_to_line(system, [0.0], [1.0])
    alpha = AlphaMap([Polynomial.variable(("x",), "x") ** n])
    seed = np.array([(1 + cmath.sqrt(1 - base)) ** (1.0 / n)], dtype=complex)
    seed = newton_refine(curve, seed, base, tol=1e-12, max_iters=5)
    return ProblemInstance(
        name=f"power({n})",
        system=system,
        line_base=np.zeros(1, dtype=complex),
        line_direction=np.ones(1, dtype=complex),
        curve=curve,
        seed_x=seed,
        seed_t=base,
        alpha=alpha,
        known_degree=2 * n,
        known_classes=2,
    )


def power_curve_roots(n: int, t: complex) -> np.ndarray:
    """All ``2n`` roots of ``x^(2n) - 2x^n + t`` from ``x^n = 1 +- sqrt(1 - t)``; shape (2n, 1)."""
    t = complex(t)
    if abs(t) < 1e-12 or abs(t - 1) < 1e-12:
        raise ValueError("t is a branch point")
    roots = []
    unity = np.exp(2j * np.pi * np.arange(n) / n)
    for sign in (1, -1):
        r = 1 + sign * cmath.sqrt(1 - t)
        roots.extend(r ** (1.0 / n) * unity)
    return np.array(roots, dtype=complex).reshape(-1, 1)


# -- cyclic n-roots ---------------------------------------------------------


def cyclic_parameterized(n: int) -> ParameterizedSystem:
    xs = [f"x{i}" for i in range(n)]
    us = [f"u{i}" for i in range(n)]
    names = tuple(xs + us)
    X = [Polynomial.variable(names, v) for v in xs]
    eqs = []
    for i in range(n - 1):
        f = Polynomial(names)
        for j in range(n):
            term = Polynomial.constant(names, 1.0)
            for l in range(i + 1):
                term = term * X[(j + l) % n]
            f = f + term
        eqs.append(f + Polynomial.variable(names, us[i]))
    prod = Polynomial.constant(names, 1.0)
    for v in X:
        prod = prod * v
    eqs.append(prod + Polynomial.variable(names, us[n - 1]))
    return ParameterizedSystem(xs, us, eqs)


def cyclic_system(n: int, rng: np.random.Generator | None = None) -> ProblemInstance:
    """Cyclic n-roots with general parameters, restricted to a random line."""
    if not 3 <= n <= 7:
        raise ValueError("cyclic systems are supported for 3 <= n <= 7")
    rng = rng if rng is not None else np.random.default_rng()
    system = cyclic_parameterized(n)
    x_star = _gauss(rng, n)
    zeros = np.zeros(n, dtype=complex)
    u_star = -system.evaluate(x_star, zeros)
    base, direction, curve = _line_through(system, u_star, rng)
    group = dihedral_group(n)
    xnames = tuple(f"x{i}" for i in range(n))
    mono = Polynomial.variable(xnames, "x0") * Polynomial.variable(xnames, "x2")
    alpha = AlphaMap([reynolds_invariant(group, mono)])
    degree, classes = CYCLIC_COUNTS.get(n, (None, None))
    return ProblemInstance(
        name=f"cyclic({n})",
        system=system,
        line_base=base,
        line_direction=direction,
        curve=curve,
        seed_x=x_star,
        seed_t=0.0,
        alpha=alpha,
        known_degree=degree,
        known_classes=classes,
    )


# -- finite groups and the Reynolds operator ---------------------------------


@dataclass(frozen=True)
class GroupElement:
    """Signed permutation ``x_i -> signs[i] * x_{perm[i]}``."""

    perm: tuple[int, ...]
    signs: tuple[int, ...] | None = None

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError(f"{perm} is not a permutation")
        signs = tuple(int(s) for s in self.signs) if self.signs is not None else (1,) * len(perm)
        if len(signs) != len(perm) or any(s not in (1, -1) for s in signs):
            raise ValueError("signs must be +-1, one per label")
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "signs", signs)

    def __len__(self):
        return len(self.perm)

    def compose(self, other: GroupElement) -> GroupElement:
        """``self`` after ``other``: x_i -> other -> self."""
        # other: x_i -> s_i x_{p(i)}; self then sends x_{p(i)} -> s'_{p(i)} x_{p'(p(i))}
        perm = tuple(self.perm[other.perm[i]] for i in range(len(self)))
        signs = tuple(other.signs[i] * self.signs[other.perm[i]] for i in range(len(self)))
        return GroupElement(perm, signs)

    def __matmul__(self, other: GroupElement) -> GroupElement:
        return self.compose(other)

    def is_identity(self) -> bool:
        return self.perm == tuple(range(len(self))) and all(s == 1 for s in self.signs)

    def apply(self, p: Polynomial, variables: Sequence[str] | None = None) -> Polynomial:
        """Act on the first ``len(self)`` indeterminates of ``p`` (or on ``variables``)."""
        names = p.names
        labels = list(variables) if variables is not None else list(names[: len(self)])
        if len(labels) != len(self):
            raise ValueError("group element size does not match the acted-on variables")
        pos = [names.index(v) for v in labels]
        terms = {}
        for exps, c in p.terms.items():
            new = list(exps)
            for i in pos:
                new[i] = 0
            sign = 1
            for i, src in enumerate(pos):
                e = exps[src]
                new[pos[self.perm[i]]] += e
                if self.signs[i] < 0 and e % 2:
                    sign = -sign
            new = tuple(new)
            terms[new] = terms.get(new, 0j) + sign * c
        return Polynomial(names, terms)


def dihedral_group(n: int) -> list[GroupElement]:
    """D_n on labels 0..n-1: rotations ``i -> i + k`` and reflections ``i -> k - i`` (mod n)."""
    if n < 3:
        raise ValueError("dihedral group needs n >= 3")
    rotations = [GroupElement(tuple((i + k) % n for i in range(n))) for k in range(n)]
    reflections = [GroupElement(tuple((k - i) % n for i in range(n))) for k in range(n)]
    return rotations + reflections


def reynolds_invariant(
    group: Sequence[GroupElement],
    p: Polynomial,
    variables: Sequence[str] | None = None,
    normalize: bool = True,
) -> Polynomial:
    """Average of ``p`` over ``group``.

    With ``normalize`` (the default) the average is rescaled so a monomial
    input keeps its own coefficient, i.e. a monomial maps to the plain sum
    over its orbit. The raw average is returned when ``normalize`` is false
    or when the input's leading term averages to zero.
    """
    if not group:
        raise ValueError("empty group")
    total = Polynomial(p.names)
    for g in group:
        total = total + g.apply(p, variables)
    if normalize and len(p) == 1:
        ((exps, c),) = p.terms.items()
        scale = total.coefficient(exps)
        if scale != 0:
            return Polynomial(p.names, {e: (v / scale) * c for e, v in total.terms.items()})
    return total / len(group)


@dataclass(frozen=True)
class Trichotomy:
    kind: str
    a: int
    b: int


def classify_invariant_alpha(W: WitnessSet, alpha: AlphaMap, tol: float = 1e-6) -> Trichotomy:
    """Sort an invariant alpha-map into the three exclusive cases by its observed degrees."""
    a, b = decomposition_degrees(W, alpha, tol)
    d = len(W.points)
    if a == d:
        kind = ALPHA_CONSTANT
    elif a == 1:
        kind = FIBER_FIXED
    else:
        kind = NONTRIVIAL
    return Trichotomy(kind, a, b)


# -- Gaussian mixture moments --------------------------------------------------


def _gaussian_moments(mu: Polynomial, var: Polynomial, upto: int) -> list[Polynomial]:
    """Raw moments E[X^r], r = 0..upto, of N(mu, var) via M_r = mu M_{r-1} + (r-1) var M_{r-2}."""
    one = Polynomial.constant(mu.names, 1.0)
    M = [one, mu]
    for r in range(2, upto + 1):
        M.append(mu * M[r - 1] + (r - 1) * var * M[r - 2])
    return M


def gaussian_moment_system(k: int = 2, rng: np.random.Generator | None = None) -> ProblemInstance:
    """Mixture of ``k`` univariate Gaussians matched to moments ``m_1 .. m_{3k-1}``.

    Unknowns are the weights ``a_i``, means ``mu_i`` and variances ``s_i``;
    the weights sum to one. ``alpha = mu_1 + ... + mu_k`` is invariant under
    relabeling the components.
    """
    if k not in (2, 3):
        raise ValueError("Gaussian mixtures are supported for k in {2, 3}")
    rng = rng if rng is not None else np.random.default_rng()
    r_max = 3 * k - 1
    a_names = [f"a{i + 1}" for i in range(k)]
    mu_names = [f"mu{i + 1}" for i in range(k)]
    s_names = [f"s{i + 1}" for i in range(k)]
    variables = a_names + mu_names + s_names
    params = [f"m{r}" for r in range(1, r_max + 1)]
    names = tuple(variables + params)
    V = {v: Polynomial.variable(names, v) for v in names}
    moments = [_gaussian_moments(V[mu_names[i]], V[s_names[i]], r_max) for i in range(k)]
    eqs = [sum((V[a] for a in a_names), Polynomial(names)) - 1.0]
    for r in range(1, r_max + 1):
        f = Polynomial(names)
        for i in range(k):
            f = f + V[a_names[i]] * moments[i][r]
        eqs.append(f - V[f"m{r}"])
    system = ParameterizedSystem(variables, params, eqs)

    weights = _gauss(rng, k)
    weights[-1] = 1.0 - weights[:-1].sum()
    x_star = np.concatenate([weights, _gauss(rng, k), _gauss(rng, k)])
    m_star = system.evaluate(x_star, np.zeros(len(params)))[1:]
    base, direction, curve = _line_through(system, m_star, rng)
    xnames = tuple(variables)
    alpha = AlphaMap([sum((Polynomial.variable(xnames, m) for m in mu_names), Polynomial(xnames))])
    known = {2: (18, 9), 3: (1350, 225)}[k]
    return ProblemInstance(
        name=f"gaussian({k})",
        system=system,
        line_base=base,
        line_direction=direction,
        curve=curve,
        seed_x=x_star,
        seed_t=0.0,
        alpha=alpha,
        known_degree=known[0],
        known_classes=known[1],
    )


def label_swap(point: Sequence[complex], k: int, perm: Sequence[int]) -> np.ndarray:
    """Relabel mixture components of a point ``(a, mu, s)`` by ``perm``."""
    p = np.asarray(point, dtype=complex).reshape(3, k)
    return p[:, list(perm)].reshape(-1)


# -- mixed-volume example ---------------------------------------------------------


def mixed_volume_example(rng: np.random.Generator | None = None, saturation_tol: float = 1e-8) -> ProblemInstance:
    """``(u1 + u2 (x1 x2^2 + x1^2 x2)) x1 x2 = 0``, ``u4 + u5 (x1 + x2) + u6 x1 x2 = 0``.

    The extra component on ``x1 x2 = 0`` is removed by rejecting endpoints
    within ``saturation_tol`` of it.
    """
    rng = rng if rng is not None else np.random.default_rng()
    variables = ["x1", "x2"]
    params = ["u1", "u2", "u4", "u5", "u6"]
    names = tuple(variables + params)
    V = {v: Polynomial.variable(names, v) for v in names}
    x1, x2 = V["x1"], V["x2"]
    f1 = (V["u1"] + V["u2"] * (x1 * x2**2 + x1**2 * x2)) * x1 * x2
    f2 = V["u4"] + V["u5"] * (x1 + x2) + V["u6"] * x1 * x2
    system = ParameterizedSystem(variables, params, [f1, f2])

    x_star = _gauss(rng, 2)
    u2, u5, u6 = _gauss(rng, 3)
    s, p = x_star.sum(), x_star.prod()
    u1 = -u2 * p * s
    u4 = -u5 * s - u6 * p
    u_star = np.array([u1, u2, u4, u5, u6])
    base, direction, curve = _line_through(system, u_star, rng)
    xnames = tuple(variables)
    alpha = AlphaMap([Polynomial.variable(xnames, "x1") + Polynomial.variable(xnames, "x2")])

    def off_hyperplanes(x: np.ndarray) -> bool:
        return abs(x[0] * x[1]) >= saturation_tol

    return ProblemInstance(
        name="mixedvol",
        system=system,
        line_base=base,
        line_direction=direction,
        curve=curve,
        seed_x=x_star,
        seed_t=0.0,
        alpha=alpha,
        known_degree=4,
        known_classes=2,
        accept=off_hyperplanes,
    )


# -- catalog -----------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    variables: str
    parameters: str
    degree: str
    classes: str
    source: str


CATALOG = (
    CatalogEntry("power(n)", "1", "1 (t)", "2n", "2", "x^(2n) - 2x^n + t, alpha = x^n"),
    CatalogEntry("cyclic(5)", "5", "5", "70", "7", "cyclic n-roots benchmark, D_5 Reynolds alpha"),
    CatalogEntry("cyclic(6)", "6", "6", "156", "13", "cyclic n-roots benchmark"),
    CatalogEntry("cyclic(7)", "7", "7", "924", "66", "cyclic n-roots benchmark"),
    CatalogEntry("gaussian(2)", "6", "5", "18", "9", "moment equations, 2-component mixture, alpha = mu1+mu2"),
    CatalogEntry("gaussian(3)", "9", "8", "1350", "225", "moment equations, 3-component mixture"),
    CatalogEntry("mixedvol", "2", "5", "4", "2", "sparse system with mixed volume 4, alpha = x1+x2"),
)


_NAME = re.compile(r"^(power|cyclic|gaussian|mixedvol)\(?(\d*)\)?$")


def make_problem(name: str, rng: np.random.Generator | None = None, n: int | None = None, k: int | None = None) -> ProblemInstance:
    """Build a catalog problem from a name such as ``cyclic5``, ``cyclic(6)``, ``power`` or ``gaussian2``."""
    m = _NAME.match(name.strip().lower())
    if not m:
        raise ValueError(f"unknown problem {name!r}; expected power, cyclic, gaussian or mixedvol")
    family, digits = m.groups()
    size = int(digits) if digits else None
    if family == "power":
        return power_curve(size or n or 5)
    if family == "cyclic":
        return cyclic_system(size or n or 5, rng)
    if family == "gaussian":
        return gaussian_moment_system(size or k or 2, rng)
    if digits:
        raise ValueError("mixedvol takes no size")
    return mixed_volume_example(rng)
