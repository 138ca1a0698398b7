"""Invariant suites that depend only on the model, domgraph and inner modules."""
import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from rangebound.domgraph import assemble, incidence_matrix, membership_localization, projector
from rangebound.inner import inscribed_ball, inscribed_ellipsoid
from rangebound.model import MeasurementBatch, build_bounds


def _instance(seed, n, m, err):
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1000, 1000, size=(m, n))
    x = rng.uniform(-100, 100, size=n)
    z = (1 + err * rng.uniform(-1, 1, m)) * np.linalg.norm(A - x, axis=1)
    b = build_bounds(MeasurementBatch("plain", "relative", z, -err, err))
    return A, b


@given(st.integers(2, 20))
def test_projector_idempotent_and_annihilates_ones(m):
    Q = projector(m)
    np.testing.assert_allclose(Q @ Q, Q, atol=1e-13)
    np.testing.assert_allclose(Q @ np.ones(m), 0.0, atol=1e-13)
    assert np.linalg.matrix_rank(Q) == m - 1


@given(st.integers(2, 20))
def test_incidence_rows_are_signed_pairs(m):
    E = incidence_matrix(m)
    assert E.shape == (m * (m - 1) // 2, m)
    assert set(np.unique(E)) <= {-1.0, 0.0, 1.0}
    np.testing.assert_array_equal((E == 1).sum(axis=1), 1)
    np.testing.assert_array_equal((E == -1).sum(axis=1), 1)
    np.testing.assert_array_equal(E @ np.ones(m), 0)
    # first nonzero of each row is +1 and rows are lexicographic pairs
    first = np.argmax(E != 0, axis=1)
    np.testing.assert_array_equal(E[np.arange(len(E)), first], 1)


@given(y=st.floats(1e-3, 1e8), e1=st.floats(0.0, 0.4), e2=st.floats(0.0, 0.4),
       kind=st.sampled_from(["plain", "squared"]), mode=st.sampled_from(["relative", "absolute"]))
def test_build_bounds_monotone(y, e1, e2, kind, mode):
    small, big = sorted((e1, e2))
    if mode == "absolute":
        small, big = small * y, big * y
        y_eff = y * 2  # keep readings above the error bound
    else:
        y_eff = y
    b1 = build_bounds(MeasurementBatch(kind, mode, [y_eff], -small, small))
    b2 = build_bounds(MeasurementBatch(kind, mode, [y_eff], -big, big))
    assert b2.lo[0] <= b1.lo[0] * (1 + 1e-12) + 1e-300
    assert b2.hi[0] >= b1.hi[0] * (1 - 1e-12)
    assert b1.lo[0] <= b1.hi[0]


@given(seed=st.integers(0, 100_000), m=st.integers(3, 7), err=st.floats(0.005, 0.2))
def test_recourse_never_loses(seed, m, err):
    A, b = _instance(seed, 2, m, err)
    sys = assemble(A)
    free = inscribed_ball(sys, b).radius
    fixed = inscribed_ball(sys, b, recourse=False).radius
    assert fixed <= free * (1 + 1e-6) + 1e-6


@given(seed=st.integers(0, 100_000), n=st.sampled_from([2, 3]), extra=st.integers(1, 4),
       err=st.floats(0.005, 0.2))
def test_inner_set_boundaries_inside_X(seed, n, extra, err):
    A, b = _instance(seed, n, n + extra, err)
    sys = assemble(A)
    u = np.random.default_rng(seed).normal(size=(200, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    tol = 1e-7 * (1 + b.hi)
    ball = inscribed_ball(sys, b)
    assert membership_localization(ball.boundary(u), sys, b, tol=tol).all()
    ell = inscribed_ellipsoid(sys, b)
    assert membership_localization(ell.boundary(u), sys, b, tol=tol).all()
