import numpy as np
import pytest

from rangebound import ConeProgram, Status
from rangebound.conic import Layout, Tolerances
from rangebound.errors import ArgumentError

BACKENDS = ["clarabel", "cvxopt"]


@pytest.mark.parametrize("backend", BACKENDS)
def test_lp(backend):
    p = ConeProgram(2, [1.0, 1.0])
    p.add_le([[-1.0, 0.0], [0.0, -1.0]], [-3.0, -1.0])
    sol = p.solve(backend=backend)
    assert sol.optimal
    assert sol.objective_value == pytest.approx(4.0, abs=1e-7)
    np.testing.assert_allclose(sol.primal, [3.0, 1.0], atol=1e-6)
    assert sol.max_violation <= 1e-6


@pytest.mark.parametrize("backend", BACKENDS)
def test_soc_unit_ball(backend):
    # max x1 + x2 over ||x|| <= 1
    p = ConeProgram(2, [1.0, 1.0], sense="max")
    p.add_soc(np.eye(2), np.zeros(2), np.zeros(2), 1.0)
    sol = p.solve(backend=backend)
    assert sol.objective_value == pytest.approx(np.sqrt(2), abs=1e-7)
    np.testing.assert_allclose(sol.primal, [1 / np.sqrt(2)] * 2, atol=1e-6)


@pytest.mark.parametrize("backend", BACKENDS)
def test_psd(backend):
    # max trace W s.t. 0 <= W <= I, W symmetric 2x2 parametrised by (w11, w12, w22)
    B = np.zeros((2, 2, 3))
    B[0, 0, 0] = B[1, 1, 2] = 1.0
    B[0, 1, 1] = B[1, 0, 1] = 1.0
    p = ConeProgram(3, [1.0, 0.0, 1.0], sense="max")
    p.add_psd(np.zeros((2, 2)), B)
    p.add_psd(np.eye(2), -B)
    sol = p.solve(backend=backend)
    assert sol.objective_value == pytest.approx(2.0, abs=1e-6)
    np.testing.assert_allclose(sol.primal, [1.0, 0.0, 1.0], atol=1e-5)


@pytest.mark.parametrize("backend", BACKENDS)
def test_equality_and_infeasible(backend):
    p = ConeProgram(1, [1.0])
    p.add_eq([[1.0]], [2.0])
    assert p.solve(backend=backend).primal[0] == pytest.approx(2.0, abs=1e-7)
    q = ConeProgram(1, [1.0])
    q.add_le([[1.0], [-1.0]], [0.0, -1.0])
    assert q.solve(backend=backend).status is Status.INFEASIBLE


def test_backends_agree_random_socp():
    rng = np.random.default_rng(4)
    for _ in range(5):
        n = 4
        c = rng.normal(size=n)
        p = ConeProgram(n, c, sense="max")
        for _ in range(3):
            F = rng.normal(size=(3, n))
            p.add_soc(F, rng.normal(size=3), np.zeros(n), 5.0)
        p.add_le(np.vstack([np.eye(n), -np.eye(n)]), np.full(2 * n, 10.0))
        a, b = p.solve(backend="clarabel"), p.solve(backend="cvxopt")
        assert a.optimal and b.optimal
        assert a.objective_value == pytest.approx(b.objective_value, rel=1e-6, abs=1e-6)


def test_violation_and_value():
    p = ConeProgram(2, [1.0, 2.0])
    p.add_le([[1.0, 0.0]], [1.0])
    p.add_soc(np.eye(2), np.zeros(2), np.zeros(2), 1.0)
    assert p.violation(np.array([0.5, 0.0])) == 0.0
    # relative to the data scale: (2 - 1) / (1 + 1)
    assert p.violation(np.array([2.0, 0.0])) == pytest.approx(0.5)
    assert p.value(np.array([1.0, 1.0])) == 3.0


def test_layout():
    L = Layout(c=(1,), r=1, h=(2,))
    assert L.size == 4
    assert L["c"] == slice(0, 1) and L["r"] == 1
    v = L.unpack(np.arange(4.0))
    assert v["c"].shape == (1,) and v["r"] == 1.0
    with pytest.raises(ArgumentError):
        Layout(x=3)


def test_unknown_backend_and_sense():
    with pytest.raises(ArgumentError):
        ConeProgram(1, [1.0]).solve(backend="nope")
    with pytest.raises(ArgumentError):
        ConeProgram(1, [1.0], sense="up")


def test_cbf_dump():
    p = ConeProgram(2, [1.0, 1.0])
    p.add_le([[-1.0, 0.0]], [-1.0])
    p.add_soc(np.eye(2), np.zeros(2), np.zeros(2), 2.0)
    text = p.to_cbf()
    assert text.startswith("VER\n3")
    assert "OBJSENSE" in text and "Q 3" in text


def test_iteration_cap_reported():
    p = ConeProgram(2, [1.0, 1.0], sense="max")
    p.add_soc(np.eye(2), np.zeros(2), np.zeros(2), 1.0)
    sol = p.solve(Tolerances(max_iter=1))
    assert sol.status in (Status.OPTIMAL, Status.NUMERICAL_FAILURE)
    if sol.optimal:
        assert sol.max_violation <= 1e-6


def test_auto_falls_back_to_cvxopt(monkeypatch):
    import rangebound.conic as conic

    def broken(prog, tol):
        return conic.Solution(Status.NUMERICAL_FAILURE, backend_status="AlmostSolved")

    monkeypatch.setattr(conic, "_solve_clarabel", broken)
    p = ConeProgram(1, [1.0])
    p.add_le([[-1.0]], [-2.0])
    sol = p.solve()
    assert sol.optimal and sol.backend_status == "optimal"
    assert sol.primal[0] == pytest.approx(2.0, abs=1e-7)
