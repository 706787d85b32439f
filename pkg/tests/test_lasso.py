import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stlcode.errors import InputError
from stlcode.lasso import (
    LassoProblem,
    kkt_residual,
    lasso_objective,
    soft_threshold,
    solve_weighted_lasso,
)

from oracles import lasso_by_sign_enumeration, naive_lasso_objective


def random_problem(rng, k=None, n=None, warm=False):
    k = k or int(rng.integers(1, 9))
    n = n or int(rng.integers(1, 7))
    return LassoProblem(
        B=rng.standard_normal((k, n)),
        z=rng.standard_normal(k),
        weights=rng.uniform(0.1, 2.0, k),
        beta=float(rng.uniform(0.05, 2.0)),
        warm_start=rng.standard_normal(n) if warm else None,
    )


class TestExamples:
    def test_scalar_soft_threshold(self):
        sol = solve_weighted_lasso(LassoProblem([[1.0]], [1.0], [1.0], 0.5))
        assert sol.s[0] == pytest.approx(0.75, abs=1e-15)
        assert sol.objective == pytest.approx(0.4375, abs=1e-15)
        assert sol.converged and sol.active_set == (0,)

    def test_scalar_zero_solution(self):
        sol = solve_weighted_lasso(LassoProblem([[1.0]], [1.0], [1.0], 4.0))
        assert sol.s[0] == 0.0
        assert sol.active_set == ()

    def test_identity_componentwise(self):
        sol = solve_weighted_lasso(LassoProblem(np.eye(2), [1.0, -2.0], [1.0, 1.0], 1.0))
        np.testing.assert_allclose(sol.s, [0.5, -1.5], atol=1e-14)

    def test_seeded_instance_against_enumeration(self):
        rng = np.random.default_rng(2024)
        prob = LassoProblem(
            rng.standard_normal((5, 4)), rng.standard_normal(5), rng.uniform(0.2, 3, 5), 0.7
        )
        oracle_obj, oracle_s = lasso_by_sign_enumeration(prob.B, prob.z, prob.weights, 0.7)
        sol = solve_weighted_lasso(prob)
        assert abs(sol.objective - oracle_obj) <= 1e-8
        np.testing.assert_allclose(sol.s, oracle_s, atol=1e-7)


class TestObjective:
    def test_zero_activation(self):
        prob = LassoProblem([[1.0, 2.0], [3.0, 4.0]], [1.0, -2.0], [0.5, 2.0], 1.0)
        assert lasso_objective(prob, [0, 0]) == pytest.approx(0.5 * 1 + 2.0 * 4)

    def test_direct_evaluation(self):
        assert lasso_objective(LassoProblem([[1.0]], [3.0], [2.0], 1.0), [1.0]) == 9.0

    def test_matches_naive_recomputation(self, rng):
        for _ in range(20):
            prob = random_problem(rng)
            s = rng.standard_normal(prob.n)
            ref = naive_lasso_objective(
                prob.B.tolist(), prob.z.tolist(), prob.weights.tolist(), prob.beta, s.tolist()
            )
            assert lasso_objective(prob, s) == pytest.approx(ref, rel=1e-12)

    def test_dimension_mismatch(self):
        prob = LassoProblem([[1.0]], [1.0], [1.0], 1.0)
        with pytest.raises(InputError):
            lasso_objective(prob, [1.0, 2.0])
        with pytest.raises(InputError):
            kkt_residual(prob, [1.0, 2.0])


class TestKKT:
    def test_exact_scalar_optimum(self):
        assert kkt_residual(LassoProblem([[1.0]], [1.0], [1.0], 0.5), [0.75]) <= 1e-12

    def test_zero_when_beta_dominates(self, rng):
        prob = random_problem(rng)
        big = 2 * np.abs(prob.B.T @ (prob.weights * prob.z)).max()
        prob = LassoProblem(prob.B, prob.z, prob.weights, big)
        assert kkt_residual(prob, np.zeros(prob.n)) == 0.0

    def test_perturbed_active_coordinate(self):
        rng = np.random.default_rng(5)
        prob = LassoProblem(rng.standard_normal((6, 3)), rng.standard_normal(6), rng.uniform(0.5, 2, 6), 0.3)
        sol = solve_weighted_lasso(prob)
        j = sol.active_set[0]
        s = sol.s.copy()
        s[j] += 0.1
        # hand formula for the perturbed coordinate
        g = 2 * prob.B.T @ (prob.weights * (prob.B @ s - prob.z))
        expected = abs(g[j] + prob.beta * np.sign(s[j]))
        others = []
        for i in range(prob.n):
            if i == j:
                continue
            if s[i] != 0:
                others.append(abs(g[i] + prob.beta * np.sign(s[i])))
            else:
                others.append(max(abs(g[i]) - prob.beta, 0.0))
        assert kkt_residual(prob, s) == pytest.approx(max([expected] + others), rel=1e-12)
        assert expected >= max(others)


class TestValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(B=[[1.0, 2.0]], z=[1.0, 2.0], weights=[1.0], beta=1.0),
            dict(B=[[1.0]], z=[1.0], weights=[0.0], beta=1.0),
            dict(B=[[1.0]], z=[1.0], weights=[-1.0], beta=1.0),
            dict(B=[[1.0]], z=[1.0], weights=[1.0], beta=0.0),
            dict(B=[[1.0]], z=[1.0], weights=[1.0], beta=1.0, warm_start=[1.0, 2.0]),
            dict(B=np.zeros((0, 2)), z=[], weights=[], beta=1.0),
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(InputError):
            LassoProblem(**kwargs)

    def test_unconverged_result_is_flagged(self):
        rng = np.random.default_rng(3)
        prob = LassoProblem(rng.standard_normal((8, 6)), rng.standard_normal(8), np.ones(8), 0.01)
        sol = solve_weighted_lasso(prob, max_steps=1)
        assert not sol.converged
        assert sol.steps == 1
        assert sol.kkt_residual > 1e-8
        assert sol.objective < lasso_objective(prob, np.zeros(6))


class TestProperties:
    def test_oracle_equivalence(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            prob = random_problem(rng)
            oracle_obj, _ = lasso_by_sign_enumeration(prob.B, prob.z, prob.weights, prob.beta)
            assert solve_weighted_lasso(prob).objective - oracle_obj <= 1e-8

    def test_warm_start_dominance_and_monotone_trace(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            prob = random_problem(rng, warm=True)
            sol = solve_weighted_lasso(prob)
            assert sol.objective <= lasso_objective(prob, prob.warm_start)
            assert np.all(np.diff(sol.trace) < 0)
            assert sol.trace[0] == pytest.approx(lasso_objective(prob, prob.warm_start))
            assert sol.objective == lasso_objective(prob, sol.s)
            assert sol.converged and sol.kkt_residual <= 1e-8

    def test_rank_deficient_dictionary(self):
        # duplicated and zero columns; k < n
        rng = np.random.default_rng(13)
        for _ in range(50):
            base = rng.standard_normal((3, 3))
            B = np.column_stack([base, base[:, 0], np.zeros(3), -base[:, 1]])
            prob = LassoProblem(B, rng.standard_normal(3), rng.uniform(0.5, 2, 3), 0.2)
            sol = solve_weighted_lasso(prob)
            oracle_obj, _ = lasso_by_sign_enumeration(B, prob.z, prob.weights, 0.2)
            assert sol.converged
            assert sol.objective - oracle_obj <= 1e-8

    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(0, 2**32 - 1),
        st.integers(1, 6),
        st.floats(1.0, 3.0),
    )
    def test_zero_threshold(self, seed, n, excess):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 9))
        B = rng.standard_normal((k, n))
        z = rng.standard_normal(k)
        w = rng.uniform(0.1, 2, k)
        beta = excess * max(2 * np.abs(B.T @ (w * z)).max(), 1e-12)
        sol = solve_weighted_lasso(LassoProblem(B, z, w, beta, warm_start=rng.standard_normal(n)))
        assert np.all(sol.s == 0.0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.floats(0.01, 3.0))
    def test_orthonormal_reduction(self, seed, n, beta):
        rng = np.random.default_rng(seed)
        k = n + int(rng.integers(0, 3))
        w = rng.uniform(0.2, 3.0, k)
        Q, _ = np.linalg.qr(rng.standard_normal((k, n)))
        B = Q / np.sqrt(w)[:, None]  # makes B^T W B = I
        z = 2 * rng.standard_normal(k)
        sol = solve_weighted_lasso(LassoProblem(B, z, w, beta))
        expected = soft_threshold(B.T @ (w * z), beta / 2)
        np.testing.assert_allclose(sol.s, expected, atol=1e-10, rtol=0)
