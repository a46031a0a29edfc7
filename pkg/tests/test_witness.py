import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monodec.algebra import Polynomial
from monodec.problems import dihedral_group, make_problem, power_curve, power_curve_roots, reynolds_invariant
from monodec.witness import (
    APPEND_A,
    APPEND_B,
    APPEND_BOTH,
    DISCARD,
    AlphaMap,
    AlphaFactor,
    BetaFactor,
    NonUniformPartitionError,
    PointRegistry,
    WitnessSet,
    alpha_equivalent,
    alpha_image,
    classify_endpoint,
    decomposition_degrees,
    multi_factor_classify,
    partition_by_alpha,
    points_equal,
)

SQ3 = np.sqrt(3.0)
X = ("x",)
Z = ("z",)


def x_power(k):
    return AlphaMap([Polynomial.variable(X, "x") ** k])


def z_power(k):
    return AlphaMap([Polynomial.variable(Z, "z") ** k])


def power_fiber(n, t=-3.0):
    P = power_curve(n)
    return WitnessSet(P.curve, t, tuple(power_curve_roots(n, t)))


# -- alpha images and equivalence ---------------------------------------------------


def test_alpha_images():
    a = x_power(2)
    assert alpha_image(a, [SQ3])[0] == pytest.approx(3.0)
    assert alpha_image(a, [1j])[0] == pytest.approx(-1.0)


def test_cyclic5_alpha_at_ones():
    P = make_problem("cyclic5", np.random.default_rng(0))
    assert alpha_image(P.alpha, np.ones(5))[0] == pytest.approx(5.0)


def test_alpha_equivalence_examples():
    a = x_power(2)
    assert alpha_equivalent(a, [SQ3], [-SQ3])
    assert not alpha_equivalent(a, [SQ3], [1j])
    assert alpha_equivalent(a, [1j], [1j])


def test_alpha_rejects_t():
    with pytest.raises(ValueError):
        AlphaMap([Polynomial.variable(("x", "t"), "t")])


def test_compose():
    outer = z_power(3)
    inner = x_power(2)
    composite = outer.compose(inner)
    assert composite.components[0] == Polynomial.variable(X, "x") ** 6


# -- endpoint classification ------------------------------------------------------------


def test_classify_same_image_goes_to_A():
    a = x_power(2)
    assert classify_endpoint([-SQ3], [[SQ3]], [[SQ3]], [SQ3], a) == APPEND_A


def test_classify_fresh_image_goes_to_B():
    a = x_power(2)
    assert classify_endpoint([1j], [[SQ3]], [[SQ3]], [SQ3], a) == APPEND_B


def test_classify_known_point_discarded():
    a = x_power(2)
    assert classify_endpoint([SQ3], [[SQ3]], [[SQ3]], [SQ3], a) == DISCARD


def test_classify_both():
    # B holds a representative of the -1 class only, so -sqrt(3) is new to both
    a = x_power(2)
    assert classify_endpoint([-SQ3], [[SQ3]], [[1j]], [SQ3], a) == APPEND_BOTH


def test_classify_empty_factors():
    a = x_power(2)
    assert classify_endpoint([1j], [], [[SQ3]], None, a) == APPEND_B
    assert classify_endpoint([-SQ3], [[SQ3]], [], [SQ3], a) == APPEND_A
    with pytest.raises(ValueError):
        classify_endpoint([1j], [[SQ3]], [], None, a)


def test_factor_checks():
    a = x_power(2)
    assert AlphaFactor(([SQ3], [-SQ3]), a).check()
    assert not AlphaFactor(([SQ3], [1j]), a).check()
    assert BetaFactor(([SQ3], [1j]), a).check()
    assert not BetaFactor(([SQ3], [-SQ3]), a).check()


# -- partitions and degrees ---------------------------------------------------------------


def test_partition_power2():
    W = power_fiber(2)
    blocks = partition_by_alpha(W, x_power(2))
    images = sorted(round(float(np.real(alpha_image(x_power(2), W.points[b[0]])[0]))) for b in blocks)
    assert sorted(len(b) for b in blocks) == [2, 2]
    assert images == [-1, 3]
    for b in blocks:
        x0, x1 = (W.points[i][0] for i in b)
        assert abs(x0 + x1) < 1e-12


def test_constant_alpha_one_block():
    W = power_fiber(3)
    const = AlphaMap([Polynomial.constant(X, 2.0)])
    assert partition_by_alpha(W, const) == [list(range(6))]


def test_injective_alpha_singletons():
    W = power_fiber(3)
    assert len(partition_by_alpha(W, x_power(1))) == 6


def test_power1000_degrees():
    W = power_fiber(1000)
    assert decomposition_degrees(W, x_power(1000)) == (1000, 2)


def test_power1000_beta_factor_images():
    # one representative per class: the images under x^1000 are the two roots of y^2 - 2y - 3
    W = power_fiber(1000)
    blocks = partition_by_alpha(W, x_power(1000))
    reps = [W.points[b[0]] for b in blocks]
    images = sorted(alpha_image(x_power(1000), r)[0].real for r in reps)
    assert images == pytest.approx([-1.0, 3.0], abs=1e-9)


def test_non_uniform_partition_error():
    a = x_power(2)
    with pytest.raises(NonUniformPartitionError):
        decomposition_degrees([[SQ3], [-SQ3], [1j]], a)


def test_cyclic5_degrees(cyclic5, cyclic5_fiber):
    W, _ = cyclic5_fiber
    assert decomposition_degrees(W, cyclic5.alpha) == (10, 7)
    x0 = Polynomial.variable(tuple(f"x{i}" for i in range(5)), "x0")
    linear = AlphaMap([reynolds_invariant(dihedral_group(5), x0)])
    assert decomposition_degrees(W, linear) == (70, 1)


@pytest.mark.parametrize("n", [2, 3, 5, 10])
def test_degree_product_is_fiber_size(n):
    W = power_fiber(n, t=0.3 + 0.4j)
    a, b = decomposition_degrees(W, power_curve(n).alpha)
    assert a * b == len(W.points)


def test_degree_product_cyclic5(cyclic5, cyclic5_fiber):
    W, _ = cyclic5_fiber
    a, b = decomposition_degrees(W, cyclic5.alpha)
    assert a * b == 70


# -- multi-factor chains --------------------------------------------------------------------


def test_multi_factor_power1000():
    W = power_fiber(1000)
    chain = [x_power(2), z_power(2), z_power(2), z_power(5), z_power(5), z_power(5)]
    result = multi_factor_classify(W, chain)
    assert result.degrees == (2, 2, 2, 5, 5, 5, 2)
    assert len(result.partitions[-1]) == 1


def test_multi_factor_power20():
    W = power_fiber(20)
    result = multi_factor_classify(W, [x_power(2), z_power(2), z_power(5)])
    assert result.degrees == (2, 2, 5, 2)
    assert int(np.prod(result.degrees)) == 40


def test_single_map_chain_is_partition():
    W = power_fiber(5)
    a = power_curve(5).alpha
    result = multi_factor_classify(W, [a])
    assert [list(b) for b in result.partitions[0]] == partition_by_alpha(W, a)
    assert result.degrees == (5, 2)


# -- point registry -------------------------------------------------------------------------


def test_points_equal_is_relative():
    assert points_equal([1e6], [1e6 + 0.5])
    assert not points_equal([1.0], [1.0 + 1e-4])


complex_st = st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(complex_st, min_size=3, max_size=3), min_size=1, max_size=20))
def test_registry_double_insert_never_grows(points):
    reg = PointRegistry(3, rng=np.random.default_rng(0))
    for p in points:
        reg.add(p)
    size = len(reg)
    for p in points:
        idx, inserted = reg.add(p)
        assert not inserted
        assert points_equal(reg[idx], p)
    assert len(reg) == size


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=12), st.floats(min_value=-3, max_value=3), st.floats(min_value=0.2, max_value=3))
def test_registry_counts_distinct_fiber_points(n, re, im):
    roots = power_curve_roots(n, complex(re, im))
    reg = PointRegistry(1, rng=np.random.default_rng(1))
    for p in roots:
        reg.add(p)
    assert len(reg) == 2 * n
    # every stored point is found again after a tiny perturbation
    for p in roots:
        assert reg.find(p * (1 + 1e-9)) is not None


def test_alpha_equivalence_relation_on_fibers():
    W = power_fiber(5, t=0.7 - 0.2j)
    a = power_curve(5).alpha
    pts = W.points
    rel = [[alpha_equivalent(a, p, q) for q in pts] for p in pts]
    n = len(pts)
    for i in range(n):
        assert rel[i][i]
        for j in range(n):
            assert rel[i][j] == rel[j][i]
            for k in range(n):
                if rel[i][j] and rel[j][k]:
                    assert rel[i][k]


# -- witness sets ----------------------------------------------------------------------------


def test_witness_set_rejects_off_fiber_points():
    P = power_curve(2)
    with pytest.raises(ValueError):
        WitnessSet(P.curve, -3.0, ([SQ3], [1.5]))


def test_witness_set_rejects_duplicates():
    P = power_curve(2)
    with pytest.raises(ValueError):
        WitnessSet(P.curve, -3.0, ([SQ3], [SQ3]))


def test_witness_set_completeness():
    W = power_fiber(2)
    assert len(W) == 4
    assert WitnessSet(W.curve, W.base, W.points, degree=4).is_complete
