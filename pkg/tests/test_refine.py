import numpy as np
import pytest

from conftest import random_case
from oracles import in_true_grid
from rangebound import (
    BoundsVector,
    DegenerateCenter,
    assemble,
    build_bounds,
    central_estimate,
    enlarge_bounds,
    feasible_point_search,
    inscribed_ball,
    linearization_points,
    outer_box,
)
from rangebound.bench import TrialConfig, gen_scenario


def test_linearization_points_on_inner_spheres():
    s = random_case(0, m=4)
    b = build_bounds(s.batch)
    c = np.array([5.0, -3.0])
    P = linearization_points(c, s.anchors, b)
    np.testing.assert_allclose(np.linalg.norm(P - s.anchors, axis=1), np.sqrt(b.lo))
    # each p_i lies on the ray from a_i through c
    d = (c - s.anchors) / np.linalg.norm(c - s.anchors, axis=1)[:, None]
    u = (P - s.anchors) / np.linalg.norm(P - s.anchors, axis=1)[:, None]
    np.testing.assert_allclose(u, d, atol=1e-12)
    with pytest.raises(DegenerateCenter):
        linearization_points(s.anchors[1], s.anchors, b)


def test_search_zero_when_center_feasible():
    for seed in range(10):
        s = random_case(seed, m=5)
        b = build_bounds(s.batch)
        rep = feasible_point_search(s.true_location, assemble(s), b)
        assert rep.slacks.sum() <= 1e-6 * (1 + b.hi.max())


def test_search_output_in_X_and_improves():
    hits = 0
    for seed in range(30):
        s = random_case(seed, m=3, err=0.02)
        b = build_bounds(s.batch)
        sys = assemble(s)
        box = outer_box(sys, b)
        est = central_estimate(box, sys, b)
        if est.branch == "center":
            assert in_true_grid(box.center[None], s.anchors, b.lo, b.hi, tol=1e-6 * (1 + b.hi.max()))[0]
        else:
            assert est.search.x_hat.shape == (2,)
            assert np.all(est.search.slacks >= 0)
            hits += est.search.in_true_set
    assert hits > 0


def test_enlarge_zero_on_consistent_bounds():
    for seed in range(40):
        s = random_case(seed, m=3 + seed % 5, err=0.05)
        b = build_bounds(s.batch)
        rep = enlarge_bounds(assemble(s), b, r=0.0)
        assert np.all(rep.nu_plus <= 1e-7) and np.all(rep.nu_minus <= 1e-7)
        assert not rep.outliers_detected


def test_enlarge_repairs_outliers():
    cfg = TrialConfig(m=5, outlier_prob=0.5)
    repaired = 0
    for i in range(10):
        s = gen_scenario(cfg, i)
        b = build_bounds(s.batch)
        sys = assemble(s)
        rep = enlarge_bounds(sys, b, r=0.01)
        adj = rep.adjusted_bounds
        assert np.all(adj.lo <= b.lo) and np.all(adj.hi >= b.hi)
        assert np.all(adj.lo >= 0)
        assert inscribed_ball(sys, adj).radius >= 0.01 - 1e-6
        repaired += rep.outliers_detected
    assert repaired > 0


def test_enlarge_separated_shells():
    # two far-apart anchors whose ranges cannot meet
    A = np.array([[-10.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    b = BoundsVector([1.0, 1.0, 1.0], [4.0, 4.0, 4.0])
    rep = enlarge_bounds(assemble(A), b, r=0.5)
    assert rep.outliers_detected
    assert inscribed_ball(assemble(A), rep.adjusted_bounds).radius >= 0.5 - 1e-5
    d = rep.to_dict()
    assert set(d) == {"nu_plus", "nu_minus", "adjusted_bounds", "outliers_detected", "probe_radius"}
