import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metrickernels.covering import cover_with_budget, greedy_cover, make_covering
from metrickernels.errors import (
    ConfigMismatch,
    EmptySubset,
    InsufficientPrefix,
    NonSymmetricInput,
    ValidationError,
)
from metrickernels.kernel import (
    KernelModel,
    certify,
    cross_kernel,
    embedding_gaps,
    feature_distance_sq,
    gram,
    k_bounded,
    k_hat,
    k_t_eval,
    psd_check,
    rho_bound,
)
from metrickernels.metric import from_point_cloud
from metrickernels.scalar import RadialSpec, TaylorSpec

from conftest import KERNELS, fixture_space
from oracles import two_point_feature_distance_sq, two_point_feature_distance_sq_prefix

RADIAL = RadialSpec([(1, 1)])


def both_centers(space):
    return make_covering(space, [0, 1], 1.0)


def test_k_hat_two_point(two_point):
    m = KernelModel.with_covering(two_point, RADIAL, both_centers(two_point), 1.2)
    assert k_hat(m, 0, 1) == pytest.approx(0.367879441171, abs=1e-12)
    assert k_hat(m, 0, 0) == 1.0
    t = KernelModel.with_covering(two_point, TaylorSpec.exponential(1.0), both_centers(two_point), 1.2)
    assert k_hat(t, 0, 1) == pytest.approx(1.0, abs=1e-14)
    assert k_hat(t, 0, 0) == pytest.approx(1.648721270700, abs=1e-12)


def test_k_t_two_point(two_point):
    m = KernelModel.with_truncation(two_point, RADIAL, 2, 2.0, basis=[0, 1])
    assert k_t_eval(m, 0, 1) == pytest.approx(math.exp(-15 / 16), abs=1e-14)
    assert k_t_eval(m, 1, 1) == 1.0
    with pytest.raises(ConfigMismatch):
        k_hat(m, 0, 1)


def test_rejects_zero_diameter():
    with pytest.raises(ValidationError):
        KernelModel.with_truncation(from_point_cloud([(0,)]), RADIAL, 4)


def test_rho_examples():
    space = from_point_cloud([[0.0], [0.1], [1.0]])
    cov = make_covering(space, [0, 2], 0.1)
    assert rho_bound(KernelModel.with_covering(space, RADIAL, cov)) == pytest.approx(0.141421356, abs=1e-9)
    t = KernelModel.with_truncation(fixture_space("two_point"), RADIAL, 10, 2.0)
    assert t.rho == pytest.approx(2.0**-10 * math.sqrt(2), rel=1e-15)


def test_rho_never_grows_when_refining(named_space, scalar):
    _, space = named_space
    prev = math.inf
    for k in range(4):
        m = KernelModel.with_covering(space, scalar, greedy_cover(space, space.diameter / 2**k))
        assert m.rho <= prev
        prev = m.rho


def test_gram_basics(named_space, scalar):
    _, space = named_space
    m = KernelModel.with_covering(space, scalar, greedy_cover(space, space.diameter / 2))
    g = gram(m).entries
    assert np.array_equal(g, g.T)
    if isinstance(scalar, RadialSpec):
        assert np.all(np.diag(g) == scalar.total_mass)
        assert g.max() <= scalar.total_mass
    d = np.sqrt(np.diag(g))
    assert np.all(g**2 <= np.outer(d, d) ** 2 * (1 + 1e-10))
    assert psd_check(gram(m)).passed


def test_gram_subsets(two_point):
    m = KernelModel.with_covering(two_point, RADIAL, both_centers(two_point))
    assert gram(m, [1]).entries.tolist() == [[1.0]]
    dup = gram(m, [0, 0, 1])
    assert dup.min_eigenvalue == pytest.approx(0, abs=1e-12)
    assert psd_check(dup).passed
    with pytest.raises(EmptySubset):
        gram(m, [])
    np.testing.assert_array_equal(cross_kernel(m, [0, 1], [0, 1]), gram(m).entries)


def test_psd_check_examples():
    ok = psd_check(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert ok.passed and ok.min_eigenvalue == pytest.approx(0, abs=1e-15)
    bad = psd_check(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert not bad.passed and bad.min_eigenvalue == pytest.approx(-1)
    with pytest.raises(NonSymmetricInput):
        psd_check(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_identity_like_gram():
    space = from_point_cloud(np.arange(6)[:, None] * 10.0)
    m = KernelModel.with_covering(space, RadialSpec([(5, 1)]), cover_with_budget(space, 6))
    g = gram(m).entries
    off = np.abs(g - np.diag(np.diag(g))).sum(axis=1).max()
    assert gram(m).min_eigenvalue >= 1 - off > 0


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=12, unique=True), st.floats(0.2, 1), st.sampled_from(sorted(KERNELS)))
def test_random_spaces_are_psd(xs, frac, kernel):
    space = from_point_cloud(np.array(xs)[:, None])
    if space.diameter < 1e-6:
        return
    m = KernelModel.with_covering(space, KERNELS[kernel], greedy_cover(space, frac * space.diameter))
    assert psd_check(gram(m)).passed


def test_feature_distance_two_point_closed_form(two_point):
    m = KernelModel.with_covering(two_point, RADIAL, greedy_cover(two_point, 1.0))
    assert m.q == 2.0
    expected, _ = two_point_feature_distance_sq(2.0)
    prefix_vals = two_point_feature_distance_sq_prefix(2.0, 40)
    for x in (0, 1):
        bv = feature_distance_sq(m, x, 40)
        assert expected in bv
        assert bv.value == pytest.approx(prefix_vals[x], abs=1e-12)
        assert bv.hi <= m.rho**2


def test_certify_all_centers(named_space, scalar):
    _, space = named_space
    m = KernelModel.with_covering(space, scalar, cover_with_budget(space, space.size))
    assert certify(m).passed


def test_certify_single_center(named_space, scalar):
    _, space = named_space
    m = KernelModel.with_covering(space, scalar, greedy_cover(space, space.diameter))
    rep = certify(m)
    assert all(p.interval[1] <= m.rho**2 for p in rep.points)


def test_certify_cap():
    m = KernelModel.with_covering(fixture_space("two_point"), RADIAL, greedy_cover(fixture_space("two_point"), 1.0))
    with pytest.raises(InsufficientPrefix):
        certify(m, cap=5)


def test_embedding_gaps_and_k_bounds(two_point):
    m = KernelModel.with_covering(two_point, RADIAL, greedy_cover(two_point, 1.0))
    gaps = embedding_gaps(m, 40)
    _, s = two_point_feature_distance_sq(2.0)
    assert all(math.sqrt(s) in g for g in gaps)
    # the exact kernel at (0, 1): phi(0) - phi(1) has c_phi / q^n in every slot
    exact = math.exp(-1.0)
    assert exact in k_bounded(m, 0, 1, 40)


def test_k_t_approaches_exact_kernel():
    space = fixture_space("line3")
    for N in (4, 8, 16):
        m = KernelModel.with_truncation(space, RADIAL, N, 2.0)
        bv = k_bounded(m, 0, 2, 60)
        assert abs(k_t_eval(m, 0, 2) - bv.value) <= 4 * space.diameter**2 * 2.0**-N + bv.half_width
