import logging

import numpy as np
import pytest

from porocrack.errors import DegenerateStiffness, NotConverged
from porocrack.fem import Assembler, DofMap, FieldState, boundary_nodes
from porocrack.material import MaterialParams
from porocrack.picard import Loads, PicardReport, initial_guess_linear, picard_solve
from porocrack.verify import box_mesh


def affine_problem(A, n=3, beta=0.0):
    mesh = box_mesh(n)
    dofs = DofMap.from_nodes(mesh, boundary_nodes(mesh), lambda x: x @ np.asarray(A).T)
    return mesh, dofs, MaterialParams(beta=beta)


class TestBasics:
    def test_zero_loads_zero_solution(self):
        mesh, dofs, params = affine_problem(np.zeros((3, 3)), beta=4.0)
        state, report = picard_solve(mesh, dofs, params)
        assert report.converged and report.iterations == 1
        assert not state.u.any()

    @pytest.mark.parametrize("beta", [-2.0, 0.0, 3.0])
    def test_affine_field_is_reproduced(self, beta):
        A = np.array([[0.010, 0.002, 0.0], [0.0, -0.004, 0.003], [0.001, 0.0, 0.006]])
        mesh, dofs, params = affine_problem(A, beta=beta)
        state, report = picard_solve(mesh, dofs, params, tol=1e-12, linear_tol=1e-13)
        assert report.converged
        exact = (mesh.nodes @ A.T).ravel()
        assert np.abs(state.u - exact).max() <= 1e-9 * np.abs(A).max()

    def test_beta_zero_converges_immediately(self, small_problem):
        state, report = small_problem.solve(0.0)
        assert report.converged and report.iterations == 1
        assert report.changes[0] < 1e-8

    def test_restart_from_converged_state(self, small_problem):
        state, report = small_problem.solve(-2.0)
        assert report.converged
        again, rep2 = small_problem.solve(-2.0, u0=state)
        assert rep2.iterations == 1
        # the restart accepts a plain displacement vector too
        _, rep3 = small_problem.solve(-2.0, u0=state.u)
        assert rep3.iterations == 1

    def test_report_records_each_step(self, small_problem):
        _, report = small_problem.solve(2.0)
        d = report.to_dict()
        assert d["iterations"] == len(d["relative_changes"]) == len(d["linear_residuals"])
        assert d["relative_changes"][-1] < d["tol"]
        assert max(d["linear_residuals"]) <= 1e-10
        assert PicardReport().iterations == 0

    def test_linear_guess_matches_beta_zero(self, small_problem):
        lin = small_problem.linear_state()
        state, _ = small_problem.solve(0.0)
        np.testing.assert_allclose(state.u, lin.u, rtol=0, atol=1e-9 * np.abs(lin.u).max())

    def test_invalid_arguments(self, small_problem):
        p = small_problem
        with pytest.raises(ValueError):
            picard_solve(p.mesh, p.dofs, p.base, tol=0.0)
        with pytest.raises(ValueError):
            picard_solve(p.mesh, p.dofs, p.base, max_iter=0)


class TestContinuity:
    def relchange(self, problem, beta):
        base = problem.linear_state().u
        st, rep = picard_solve(problem.mesh, problem.dofs, problem.base.with_beta(beta),
                               tol=1e-10, u0=problem.linear_state(), assembler=problem.assembler,
                               linear_tol=1e-12)
        assert rep.converged
        return np.linalg.norm(st.u - base) / np.linalg.norm(base)

    def test_tiny_beta_matches_linear(self, small_problem):
        assert self.relchange(small_problem, 1e-8) < 1e-6

    @pytest.mark.parametrize("sign", [1.0, -1.0])
    def test_monotone_in_beta(self, small_problem, sign):
        changes = [self.relchange(small_problem, sign * b) for b in (1.0, 0.1, 0.01)]
        assert changes[0] > changes[1] > changes[2]
        # first-order in beta: each tenfold reduction shrinks the change about tenfold
        for big, small in zip(changes, changes[1:]):
            assert 5.0 < big / small < 20.0


class TestFailures:
    def test_not_converged_returns_with_flag(self, small_problem, caplog):
        p = small_problem
        with caplog.at_level(logging.WARNING, logger="porocrack.picard"):
            state, report = picard_solve(p.mesh, p.dofs, p.base.with_beta(8.0), tol=1e-14,
                                         max_iter=2, assembler=p.assembler)
        assert not report.converged and report.iterations == 2
        assert state.iteration == 2
        assert "did not reach" in caplog.text

    def test_not_converged_strict(self, small_problem):
        p = small_problem
        with pytest.raises(NotConverged) as info:
            picard_solve(p.mesh, p.dofs, p.base.with_beta(8.0), tol=1e-14, max_iter=2,
                         assembler=p.assembler, strict=True)
        exc = info.value
        assert exc.exit_code == 10
        assert exc.report.iterations == 2 and exc.state is not None
        assert exc.achieved == exc.report.changes[-1]

    def test_degenerate_stiffness(self):
        mesh, dofs, params = affine_problem(0.2 * np.eye(3), n=2, beta=-8.0)
        with pytest.raises(DegenerateStiffness) as info:
            picard_solve(mesh, dofs, params)
        assert info.value.iteration == 0
        assert info.value.element is not None

    def test_unconstrained_warns(self, caplog):
        mesh = box_mesh(1)
        dofs = DofMap(mesh.n_nodes)
        with caplog.at_level(logging.WARNING, logger="porocrack.picard"):
            state = initial_guess_linear(mesh, dofs, MaterialParams())
        assert "singular" in caplog.text
        assert not state.u.any()


def test_body_force_loads_are_used():
    mesh = box_mesh(2)
    dofs = DofMap.from_nodes(mesh, np.nonzero(mesh.nodes[:, 2] == 0)[0], [0.0, 0.0, 0.0])
    loads = Loads(body_force=lambda x: np.tile([0.0, 0.0, -1.0], (len(x), 1)))
    state, report = picard_solve(mesh, dofs, MaterialParams(beta=1.0), loads, tol=1e-10)
    assert report.converged
    assert state.u.reshape(-1, 3)[:, 2].max() <= 0.0
    assert state.u.reshape(-1, 3)[:, 2].min() < 0.0


def test_assembler_reuse_is_equivalent(small_problem):
    p = small_problem
    a, _ = picard_solve(p.mesh, p.dofs, p.base.with_beta(2.0), tol=1e-8)
    b, _ = picard_solve(p.mesh, p.dofs, p.base.with_beta(2.0), tol=1e-8,
                        assembler=Assembler(p.mesh, p.dofs))
    np.testing.assert_allclose(a.u, b.u, rtol=0, atol=1e-12)
    assert isinstance(a, FieldState)
