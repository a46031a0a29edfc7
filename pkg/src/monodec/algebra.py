"""Sparse complex polynomials, parameterized systems and their restriction to a line.

Polynomials store a dense exponent tuple per term. Systems in this package
have at most a dozen indeterminates, so nothing cleverer is needed for the
symbolic side; numerical evaluation goes through :class:`CompiledSystem`,
which batches all monomials of a system and its derivatives into numpy
arrays.
"""

from __future__ import annotations

import cmath
import math
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

__all__ = [
    "Monomial",
    "Polynomial",
    "ParameterizedSystem",
    "CurveSystem",
    "CompiledSystem",
    "restrict_to_line",
    "differentiate",
    "evaluate",
    "jacobian_x",
    "dF_dt",
]

T_NAME = "t"


class Monomial(NamedTuple):
    coeff: complex
    exps: tuple[int, ...]


def _check_scalar(c: complex) -> complex:
    c = complex(c)
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise ValueError(f"non-finite coefficient {c!r}")
    return c


class Polynomial:
    """A polynomial with complex coefficients in a fixed, ordered list of indeterminates.

    Instances are immutable. Terms with zero coefficient are dropped on
    construction, so two polynomials are equal exactly when their names and
    coefficient maps agree.
    """

    __slots__ = ("_names", "_terms")

    def __init__(self, names: Sequence[str], terms: Mapping[Sequence[int], complex] | None = None):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate indeterminate names in {names}")
        clean: dict[tuple[int, ...], complex] = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != len(names):
                raise ValueError(f"exponent tuple {exps} does not match {len(names)} indeterminates")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = _check_scalar(c)
            c = clean.get(exps, 0j) + c
            if c == 0:
                clean.pop(exps, None)
            else:
                clean[exps] = c
        self._names = names
        self._terms = clean

    # -- constructors -------------------------------------------------

    @classmethod
    def variable(cls, names: Sequence[str], name: str) -> Polynomial:
        names = tuple(names)
        if name not in names:
            raise KeyError(f"unknown indeterminate {name!r}")
        exps = tuple(1 if n == name else 0 for n in names)
        return cls(names, {exps: 1.0})

    @classmethod
    def constant(cls, names: Sequence[str], c: complex) -> Polynomial:
        names = tuple(names)
        return cls(names, {(0,) * len(names): c})

    @classmethod
    def from_monomials(cls, names: Sequence[str], monomials: Iterable[Monomial]) -> Polynomial:
        terms: dict[tuple[int, ...], complex] = {}
        for c, exps in monomials:
            exps = tuple(exps)
            terms[exps] = terms.get(exps, 0j) + complex(c)
        return cls(names, terms)

    # -- accessors ----------------------------------------------------

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    @property
    def terms(self) -> Mapping[tuple[int, ...], complex]:
        return dict(self._terms)

    def monomials(self) -> Iterator[Monomial]:
        for exps, c in self._terms.items():
            yield Monomial(c, exps)

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def variables_used(self) -> set[str]:
        used = set()
        for exps in self._terms:
            used.update(n for n, e in zip(self._names, exps) if e)
        return used

    def coefficient(self, exps: Sequence[int]) -> complex:
        return self._terms.get(tuple(exps), 0j)

    # -- arithmetic ---------------------------------------------------

    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            if other._names != self._names:
                raise ValueError(f"indeterminate mismatch: {self._names} vs {other._names}")
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return Polynomial.constant(self._names, complex(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for exps, c in other._terms.items():
            terms[exps] = terms.get(exps, 0j) + c
        return Polynomial(self._names, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self._names, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict[tuple[int, ...], complex] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0j) + c1 * c2
        return Polynomial(self._names, terms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return Polynomial(self._names, {e: c / other for e, c in self._terms.items()})
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise ValueError("polynomial powers must be non-negative integers")
        if len(self._terms) == 1:
            ((exps, c),) = self._terms.items()
            return Polynomial(self._names, {tuple(e * k for e in exps): c**k})
        result = Polynomial.constant(self._names, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._names == other._names and self._terms == other._terms

    def __hash__(self):
        return hash((self._names, frozenset(self._terms.items())))

    # -- calculus and substitution ---------------------------------------

    def differentiate(self, var: str) -> Polynomial:
        try:
            i = self._names.index(var)
        except ValueError:
            raise KeyError(f"unknown indeterminate {var!r}") from None
        terms = {}
        for exps, c in self._terms.items():
            if exps[i]:
                e = list(exps)
                e[i] -= 1
                terms[tuple(e)] = c * exps[i]
        return Polynomial(self._names, terms)

    def substitute(self, mapping: Mapping[str, Polynomial], new_names: Sequence[str]) -> Polynomial:
        """Simultaneous substitution of indeterminates by polynomials in ``new_names``.

        Indeterminates absent from ``mapping`` must appear in ``new_names``
        and are carried over unchanged.
        """
        new_names = tuple(new_names)
        images = []
        for n in self._names:
            if n in mapping:
                p = mapping[n]
                if p.names != new_names:
                    raise ValueError(f"substitution for {n!r} lives in {p.names}, expected {new_names}")
                images.append(p)
            elif n in new_names:
                images.append(Polynomial.variable(new_names, n))
            else:
                raise KeyError(f"no substitution given for {n!r}")
        result = Polynomial(new_names)
        power_cache: dict[tuple[int, int], Polynomial] = {}
        for exps, c in self._terms.items():
            term = Polynomial.constant(new_names, c)
            for i, e in enumerate(exps):
                if e:
                    key = (i, e)
                    if key not in power_cache:
                        power_cache[key] = images[i] ** e
                    term = term * power_cache[key]
            result = result + term
        return result

    def reorder(self, new_names: Sequence[str]) -> Polynomial:
        """Re-express over ``new_names`` (a superset of the used indeterminates)."""
        new_names = tuple(new_names)
        missing = self.variables_used() - set(new_names)
        if missing:
            raise ValueError(f"indeterminates {sorted(missing)} are not in {new_names}")
        index = {n: i for i, n in enumerate(self._names)}
        terms = {}
        for exps, c in self._terms.items():
            terms[tuple(exps[index[n]] if n in index else 0 for n in new_names)] = c
        return Polynomial(new_names, terms)

    def evaluate(self, values: Sequence[complex]) -> complex:
        if len(values) != len(self._names):
            raise ValueError(f"expected {len(self._names)} values, got {len(values)}")
        total = 0j
        for exps, c in self._terms.items():
            v = c
            for z, e in zip(values, exps):
                if e:
                    v *= complex(z) ** e
            total += v
        return total

    # -- serialization ----------------------------------------------------

    def to_json(self) -> list[dict]:
        return [{"coeff": [c.real, c.imag], "exps": list(e)} for e, c in self._terms.items()]

    @classmethod
    def from_json(cls, names: Sequence[str], data: Sequence[Mapping]) -> Polynomial:
        terms: dict[tuple[int, ...], complex] = {}
        for term in data:
            re, im = term["coeff"]
            exps = tuple(int(e) for e in term["exps"])
            terms[exps] = terms.get(exps, 0j) + complex(float(re), float(im))
        return cls(names, terms)

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = []
        for exps, c in self._terms.items():
            mono = "*".join(n if e == 1 else f"{n}^{e}" for n, e in zip(self._names, exps) if e)
            coeff = f"{c.real:g}" if c.imag == 0 else f"({c.real:g}{c.imag:+g}j)"
            if mono:
                parts.append(mono if c == 1 else f"{coeff}*{mono}")
            else:
                parts.append(coeff)
        return " + ".join(parts)


def differentiate(p: Polynomial, var: str) -> Polynomial:
    return p.differentiate(var)


class ParameterizedSystem:
    """Equations in variables ``x`` and parameters ``u``."""

    def __init__(self, variables: Sequence[str], parameters: Sequence[str], equations: Sequence[Polynomial]):
        self.variables = tuple(variables)
        self.parameters = tuple(parameters)
        names = self.variables + self.parameters
        if len(set(names)) != len(names):
            raise ValueError("variable and parameter names must be distinct")
        eqs = []
        for f in equations:
            extra = f.variables_used() - set(names)
            if extra:
                raise ValueError(f"equation mentions undeclared indeterminates {sorted(extra)}")
            eqs.append(f if f.names == names else f.reorder(names))
        self.equations = tuple(eqs)

    @property
    def names(self) -> tuple[str, ...]:
        return self.variables + self.parameters

    def evaluate(self, x: Sequence[complex], u: Sequence[complex]) -> np.ndarray:
        if len(x) != len(self.variables) or len(u) != len(self.parameters):
            raise ValueError("dimension mismatch")
        values = list(x) + list(u)
        return np.array([f.evaluate(values) for f in self.equations], dtype=complex)

    def __eq__(self, other):
        if not isinstance(other, ParameterizedSystem):
            return NotImplemented
        return (self.variables, self.parameters, self.equations) == (
            other.variables,
            other.parameters,
            other.equations,
        )

    def __repr__(self):
        return f"ParameterizedSystem(variables={self.variables}, parameters={self.parameters}, {len(self.equations)} equations)"


class CompiledSystem:
    """Batched numerical evaluation of F, dF/dx and dF/dt for a square curve system.

    Every monomial occurring in the equations or their derivatives is stored
    once in an exponent table; values of all three objects come out of a
    single matrix product against stacked coefficient columns.
    """

    def __init__(self, equations: Sequence[Polynomial], n_vars: int, derivatives: bool = True):
        k = len(equations)
        columns = list(equations)
        if derivatives:
            names = equations[0].names
            columns += [f.differentiate(names[j]) for f in equations for j in range(n_vars)]
            columns += [f.differentiate(names[n_vars]) for f in equations]
        index: dict[tuple[int, ...], int] = {}
        for p in columns:
            for exps in p._terms:
                index.setdefault(exps, len(index))
        if not index:
            index[(0,) * (n_vars + 1)] = 0
        self.exponents = np.array(list(index), dtype=np.int64).reshape(len(index), n_vars + 1)
        coeffs = np.zeros((len(index), len(columns)), dtype=complex)
        for col, p in enumerate(columns):
            for exps, c in p._terms.items():
                coeffs[index[exps], col] = c
        self.k = k
        self.n = n_vars
        self.coeffs = coeffs
        self.coeffs_f = np.ascontiguousarray(coeffs[:, :k])
        self.max_deg = self.exponents.max(axis=0)

    def _monomials(self, Z: np.ndarray) -> np.ndarray:
        P = Z.shape[0]
        mono = np.ones((P, self.exponents.shape[0]), dtype=complex)
        for v in range(Z.shape[1]):
            d = int(self.max_deg[v])
            if d == 0:
                continue
            powers = np.empty((P, d + 1), dtype=complex)
            powers[:, 0] = 1.0
            powers[:, 1:] = np.cumprod(np.repeat(Z[:, v : v + 1], d, axis=1), axis=1)
            mono *= powers[:, self.exponents[:, v]]
        return mono

    def _stack(self, X: np.ndarray, T) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise ValueError(f"points must have shape (P, {self.n}), got {X.shape}")
        T = np.broadcast_to(np.asarray(T, dtype=complex), (X.shape[0],))
        return np.concatenate([X, T[:, None]], axis=1)

    def residuals(self, X: np.ndarray, T) -> np.ndarray:
        return self._monomials(self._stack(X, T)) @ self.coeffs_f

    def full(self, X: np.ndarray, T) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return F (P, k), J (P, k, n) and dF/dt (P, k)."""
        if self.coeffs.shape[1] == self.k:
            raise ValueError("compiled without derivatives")
        vals = self._monomials(self._stack(X, T)) @ self.coeffs
        k, n = self.k, self.n
        F = vals[:, :k]
        J = vals[:, k : k + k * n].reshape(-1, k, n)
        Ft = vals[:, k + k * n :]
        return F, J, Ft


class CurveSystem:
    """Square system in ``variables`` and the line coordinate ``t``.

    Built by :func:`restrict_to_line` from a parameterized system, or directly
    from equations over ``variables + ("t",)``.
    """

    def __init__(
        self,
        variables: Sequence[str],
        equations: Sequence[Polynomial],
        parent: ParameterizedSystem | None = None,
        line_base: Sequence[complex] | None = None,
        line_direction: Sequence[complex] | None = None,
    ):
        self.variables = tuple(variables)
        if T_NAME in self.variables:
            raise ValueError(f"{T_NAME!r} is reserved for the line coordinate")
        names = self.variables + (T_NAME,)
        eqs = []
        for f in equations:
            extra = f.variables_used() - set(names)
            if extra:
                raise ValueError(f"equation mentions undeclared indeterminates {sorted(extra)}")
            eqs.append(f if f.names == names else f.reorder(names))
        if len(eqs) != len(self.variables):
            raise ValueError(f"system must be square in x: {len(eqs)} equations in {len(self.variables)} variables")
        self.equations = tuple(eqs)
        self.parent = parent
        self.line_base = None if line_base is None else np.asarray(line_base, dtype=complex)
        self.line_direction = None if line_direction is None else np.asarray(line_direction, dtype=complex)
        self.compiled = CompiledSystem(self.equations, len(self.variables))

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> tuple[str, ...]:
        return self.variables + (T_NAME,)

    def parameters_at(self, t: complex) -> np.ndarray:
        if self.line_base is None:
            raise ValueError("curve was not built from a parameterized system")
        return self.line_base + t * self.line_direction

    def _point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex).reshape(-1)
        if x.shape[0] != self.n:
            raise ValueError(f"point has dimension {x.shape[0]}, expected {self.n}")
        return x

    def evaluate(self, x, t: complex) -> np.ndarray:
        return self.compiled.residuals(self._point(x)[None, :], t)[0]

    def jacobian_x(self, x, t: complex) -> np.ndarray:
        return self.compiled.full(self._point(x)[None, :], t)[1][0]

    def dF_dt(self, x, t: complex) -> np.ndarray:
        return self.compiled.full(self._point(x)[None, :], t)[2][0]

    def residual_norm(self, x, t: complex) -> float:
        return float(np.max(np.abs(self.evaluate(x, t)), initial=0.0))

    def __repr__(self):
        return f"CurveSystem(variables={self.variables}, {len(self.equations)} equations)"


def restrict_to_line(system: ParameterizedSystem, base: Sequence[complex], direction: Sequence[complex]) -> CurveSystem:
    """Substitute ``u = base + t * direction`` into every equation."""
    base = np.asarray(base, dtype=complex).reshape(-1)
    direction = np.asarray(direction, dtype=complex).reshape(-1)
    m = len(system.parameters)
    if base.shape[0] != m or direction.shape[0] != m:
        raise ValueError(f"line base and direction must have {m} components")
    if not np.any(direction):
        raise ValueError("line direction must be nonzero")
    if not (np.all(np.isfinite(base)) and np.all(np.isfinite(direction))):
        raise ValueError("line must be finite")
    new_names = system.variables + (T_NAME,)
    t = Polynomial.variable(new_names, T_NAME)
    mapping = {u: complex(b) + complex(v) * t for u, b, v in zip(system.parameters, base, direction)}
    equations = [f.substitute(mapping, new_names) for f in system.equations]
    return CurveSystem(system.variables, equations, parent=system, line_base=base, line_direction=direction)


def evaluate(system: CurveSystem, x, t: complex) -> np.ndarray:
    return system.evaluate(x, t)


def jacobian_x(system: CurveSystem, x, t: complex) -> np.ndarray:
    return system.jacobian_x(x, t)


def dF_dt(system: CurveSystem, x, t: complex) -> np.ndarray:
    return system.dF_dt(x, t)


def complex_pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def from_pair(pair: Sequence[float]) -> complex:
    re, im = pair
    z = complex(float(re), float(im))
    if not cmath.isfinite(z):
        raise ValueError(f"non-finite complex value {pair!r}")
    return z
