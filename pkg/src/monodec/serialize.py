"""JSON problem files, solution reports and benchmark CSV rows.

Complex numbers are always ``[re, im]`` pairs. A polynomial is a list of
terms ``{"coeff": [re, im], "exps": [...]}`` with one exponent per
indeterminate (variables, then parameters).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .algebra import ParameterizedSystem, Polynomial, complex_pair, from_pair, restrict_to_line
from .problems import ProblemInstance
from .tracking import NewtonError, newton_refine
from .witness import AlphaMap

__all__ = [
    "ProblemFileError",
    "system_to_json",
    "system_from_json",
    "instance_to_json",
    "instance_from_json",
    "parse_problem_file",
    "write_problem_file",
    "SolutionReport",
    "load_report",
    "CSV_COLUMNS",
    "write_stats_csv",
]

CSV_COLUMNS = (
    "problem",
    "mode",
    "seed",
    "loops_taken",
    "paths_tracked",
    "path_failures",
    "points_found",
    "classes_found",
    "wall_ms",
)

SEED_CHECK_TOL = 1e-6


class ProblemFileError(ValueError):
    """Malformed or inconsistent problem file."""


def _pairs(values) -> list[list[float]]:
    return [complex_pair(z) for z in np.asarray(values, dtype=complex).reshape(-1)]


def _unpairs(values, what: str) -> np.ndarray:
    try:
        return np.array([from_pair(v) for v in values], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(f"{what}: expected a list of [re, im] pairs") from exc


def system_to_json(system: ParameterizedSystem) -> dict:
    return {
        "variables": list(system.variables),
        "parameters": list(system.parameters),
        "equations": [f.to_json() for f in system.equations],
    }


def system_from_json(data: dict) -> ParameterizedSystem:
    try:
        variables = [str(v) for v in data["variables"]]
        parameters = [str(u) for u in data["parameters"]]
        names = variables + parameters
        equations = [Polynomial.from_json(names, eq) for eq in data["equations"]]
        return ParameterizedSystem(variables, parameters, equations)
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFileError(f"invalid system: {exc}") from exc


def instance_to_json(inst: ProblemInstance) -> dict:
    data = system_to_json(inst.system)
    if inst.alpha is not None:
        data["alpha"] = [g.to_json() for g in inst.alpha.components]
    data["line"] = {"base": _pairs(inst.line_base), "direction": _pairs(inst.line_direction)}
    data["seed"] = {"x": _pairs(inst.seed_x), "t": complex_pair(inst.seed_t)}
    data["name"] = inst.name
    if inst.known_degree is not None:
        data["known_degree"] = inst.known_degree
    if inst.known_classes is not None:
        data["known_classes"] = inst.known_classes
    return data


def _affine_parameter_solve(system: ParameterizedSystem, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Parameters making ``x`` a solution, for systems affine in the parameters."""
    n, m = len(system.variables), len(system.parameters)
    for f in system.equations:
        for exps in f.terms:
            if sum(exps[n:]) > 1:
                raise ProblemFileError("no seed given and the system is not affine in its parameters")
    zero = np.zeros(m, dtype=complex)
    b = system.evaluate(x, zero)
    A = np.empty((len(system.equations), m), dtype=complex)
    for j in range(m):
        e = zero.copy()
        e[j] = 1.0
        A[:, j] = system.evaluate(x, e) - b
    u0, *_ = np.linalg.lstsq(A, -b, rcond=None)
    # add a random null-space component so the parameter point is general
    _, sv, vh = np.linalg.svd(A)
    rank = int(np.sum(sv > 1e-10 * max(sv.max(initial=0.0), 1.0)))
    if rank < len(system.equations):
        raise ProblemFileError("cannot place a random point on the system by choosing parameters; give a seed")
    null = vh[rank:].conj().T
    if null.size:
        coeffs = rng.standard_normal(null.shape[1]) + 1j * rng.standard_normal(null.shape[1])
        u0 = u0 + null @ coeffs
    return u0


def instance_from_json(data: dict, rng: np.random.Generator | None = None, name: str = "file") -> ProblemInstance:
    rng = rng if rng is not None else np.random.default_rng()
    system = system_from_json(data)
    n, m = len(system.variables), len(system.parameters)
    if len(system.equations) != n:
        raise ProblemFileError(f"system must be square: {len(system.equations)} equations in {n} variables")

    alpha = None
    if data.get("alpha") is not None:
        # alpha terms carry exponents for the variables, or for variables and parameters
        comps = []
        try:
            for g in data["alpha"]:
                widths = {len(term["exps"]) for term in g}
                names = system.names if widths == {n + m} and m else system.variables
                comps.append(Polynomial.from_json(names, g))
        except (KeyError, TypeError, ValueError) as exc:
            raise ProblemFileError(f"invalid alpha: {exc}") from exc
        for g in comps:
            if g.variables_used() & set(system.parameters):
                raise ProblemFileError("alpha may only mention variables, not parameters")
        alpha = AlphaMap([g.reorder(system.variables) for g in comps])

    seed = data.get("seed")
    line = data.get("line")
    if seed is not None:
        x = _unpairs(seed.get("x", []), "seed.x")
        if x.shape[0] != n:
            raise ProblemFileError(f"seed.x has {x.shape[0]} coordinates, expected {n}")
    else:
        x = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)

    if line is not None:
        base = _unpairs(line.get("base", []), "line.base")
        direction = _unpairs(line.get("direction", []), "line.direction")
        if base.shape[0] != m or direction.shape[0] != m:
            raise ProblemFileError(f"line vectors must have {m} components")
        if not np.any(direction):
            raise ProblemFileError("line direction must be nonzero")
        if seed is None:
            raise ProblemFileError("a file that fixes the line must also give a seed")
        t = from_pair(seed["t"]) if "t" in seed else 0j
    else:
        if seed is not None and "u" in seed:
            base = _unpairs(seed["u"], "seed.u")
            if base.shape[0] != m:
                raise ProblemFileError(f"seed.u must have {m} components")
        else:
            base = _affine_parameter_solve(system, x, rng)
        direction = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2)
        t = 0j

    curve = restrict_to_line(system, base, direction)
    res = curve.residual_norm(x, t)
    if not res < SEED_CHECK_TOL:
        raise ProblemFileError(f"seed residual {res:.3g} exceeds {SEED_CHECK_TOL:g}")
    try:
        x = newton_refine(curve, x, t, tol=1e-10, max_iters=10)
    except NewtonError as exc:
        raise ProblemFileError(f"seed does not refine to a regular solution ({exc.reason})") from exc
    return ProblemInstance(
        name=str(data.get("name", name)),
        system=system,
        line_base=base,
        line_direction=direction,
        curve=curve,
        seed_x=x,
        seed_t=t,
        alpha=alpha,
        known_degree=data.get("known_degree"),
        known_classes=data.get("known_classes"),
    )


def parse_problem_file(path, rng: np.random.Generator | None = None) -> ProblemInstance:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ProblemFileError(f"{path}: top level must be an object")
    return instance_from_json(data, rng, name=path.stem)


def write_problem_file(inst: ProblemInstance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_json(inst), indent=1))


@dataclass
class SolutionReport:
    """Outcome of one solver run.

    In standard mode ``points`` is the collected fiber; in decomposable mode it
    is the beta-factor, one point per alpha-class. ``classes`` partitions the
    point indices by alpha-image.
    """

    problem: str
    mode: str
    seed: int | None
    line_base: np.ndarray
    line_direction: np.ndarray
    base: complex
    points: list[np.ndarray]
    classes: list[list[int]]
    stats: dict[str, Any]
    degrees: tuple[int, int] | None = None
    complete: bool | None = None
    known_degree: int | None = None
    known_classes: int | None = None

    def to_json(self) -> dict:
        return {
            "problem": self.problem,
            "mode": self.mode,
            "seed": self.seed,
            "line": {"base": _pairs(self.line_base), "direction": _pairs(self.line_direction)},
            "base": complex_pair(self.base),
            "points": [_pairs(p) for p in self.points],
            "classes": self.classes,
            "degrees": list(self.degrees) if self.degrees else None,
            "complete": self.complete,
            "known_degree": self.known_degree,
            "known_classes": self.known_classes,
            "stats": self.stats,
        }

    @classmethod
    def from_json(cls, data: dict) -> SolutionReport:
        return cls(
            problem=data["problem"],
            mode=data["mode"],
            seed=data.get("seed"),
            line_base=_unpairs(data["line"]["base"], "line.base"),
            line_direction=_unpairs(data["line"]["direction"], "line.direction"),
            base=from_pair(data["base"]),
            points=[_unpairs(p, "points") for p in data["points"]],
            classes=[list(c) for c in data["classes"]],
            stats=dict(data["stats"]),
            degrees=tuple(data["degrees"]) if data.get("degrees") else None,
            complete=data.get("complete"),
            known_degree=data.get("known_degree"),
            known_classes=data.get("known_classes"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def load_report(path) -> SolutionReport:
    return SolutionReport.from_json(json.loads(Path(path).read_text()))


def write_stats_csv(rows: Sequence[dict], path_or_file) -> None:
    def write(fh):
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)

    if hasattr(path_or_file, "write"):
        write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            write(fh)
