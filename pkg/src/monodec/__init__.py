"""Numerical monodromy solving that exploits decomposable projections.

When the monodromy group of a parameterized polynomial system is imprimitive
and a map ``alpha`` exposes its blocks, only one representative per block
has to be tracked around each loop.
"""

from .algebra import CurveSystem, ParameterizedSystem, Polynomial, restrict_to_line
from .monodromy import (
    LoopSpec,
    Permutation,
    RunStats,
    StoppingCriterion,
    collect_generators,
    decomposable_monodromy,
    monodromy_loop,
    random_loop,
    standard_monodromy,
)
from .problems import (
    ProblemInstance,
    classify_invariant_alpha,
    cyclic_system,
    dihedral_group,
    gaussian_moment_system,
    make_problem,
    mixed_volume_example,
    power_curve,
    reynolds_invariant,
)
from .tracking import PathResult, TrackerConfig, newton_refine, track_batch, track_segment
from .witness import (
    AlphaMap,
    PointRegistry,
    WitnessSet,
    classify_endpoint,
    decomposition_degrees,
    multi_factor_classify,
    partition_by_alpha,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaMap",
    "CurveSystem",
    "LoopSpec",
    "ParameterizedSystem",
    "PathResult",
    "Permutation",
    "PointRegistry",
    "Polynomial",
    "ProblemInstance",
    "RunStats",
    "StoppingCriterion",
    "TrackerConfig",
    "WitnessSet",
    "classify_endpoint",
    "classify_invariant_alpha",
    "collect_generators",
    "cyclic_system",
    "decomposable_monodromy",
    "decomposition_degrees",
    "dihedral_group",
    "gaussian_moment_system",
    "make_problem",
    "mixed_volume_example",
    "monodromy_loop",
    "multi_factor_classify",
    "newton_refine",
    "partition_by_alpha",
    "power_curve",
    "random_loop",
    "reynolds_invariant",
    "restrict_to_line",
    "standard_monodromy",
    "track_batch",
    "track_segment",
]
