import math

import numpy as np
import pytest

from stlcode import expfam
from stlcode.errors import DomainError, InputError
from stlcode.expfam import BERNOULLI, GAUSSIAN, POISSON
from stlcode.irls import EncodeConfig, encode, encode_batch, irls_step, master_objective
from stlcode.lasso import LassoProblem, solve_weighted_lasso

from oracles import grid_minimize_1d, numeric_gradient, numeric_hessian

FAMILIES = [GAUSSIAN, BERNOULLI, POISSON]


def random_instance(fam, rng):
    k = int(rng.integers(2, 9))
    n = int(rng.integers(1, 7))
    B = rng.standard_normal((k, n)) / np.sqrt(n)
    s_true = rng.standard_normal(n) * (rng.random(n) < 0.5)
    x = expfam.sample(fam, B @ s_true, rng)
    return B, np.atleast_1d(x), float(rng.uniform(0.05, 1.0))


def scalar_F(fam, x, beta):
    return lambda s: 2 * (expfam.log_partition(fam, s) - x * s) + beta * abs(s)


class TestMasterObjective:
    def test_gaussian_zero(self):
        assert master_objective(GAUSSIAN, [[1.0, 2.0]], [3.0], [0.0, 0.0], 0.5) == 0.0

    def test_bernoulli_zero(self):
        assert master_objective(BERNOULLI, [[1.0]], [1.0], [0.0], 0.5) == pytest.approx(2 * math.log(2))

    def test_gaussian_identity(self, rng):
        for _ in range(20):
            k, n = rng.integers(1, 8, size=2)
            B = rng.standard_normal((k, n))
            x = rng.standard_normal(k)
            s = rng.standard_normal(n)
            beta = rng.uniform(0.1, 2)
            lhs = master_objective(GAUSSIAN, B, x, s, beta) - master_objective(
                GAUSSIAN, B, x, np.zeros(n), beta
            )
            rhs = np.sum((B @ s - x) ** 2) + beta * np.abs(s).sum() - np.sum(x**2)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)

    def test_domain_violation(self):
        with pytest.raises(DomainError):
            master_objective(BERNOULLI, [[1.0]], [0.5], [0.0], 1.0)


class TestIrlsStep:
    def test_gaussian_weights_and_target(self, rng):
        B = rng.standard_normal((4, 3))
        x = rng.standard_normal(4)
        step = irls_step(GAUSSIAN, B, x, rng.standard_normal(3), EncodeConfig(beta=0.3))
        np.testing.assert_array_equal(step.weights, np.ones(4))
        np.testing.assert_allclose(step.target, x, atol=1e-14)

    def test_bernoulli_scalar(self):
        step = irls_step(BERNOULLI, [[1.0]], [1.0], [0.0], EncodeConfig(beta=0.4))
        assert step.weights[0] == 0.25
        assert step.target[0] == 2.0  # 4 * (1 - 0.5) + 0
        # the weighted lasso: 0.25 (s - 2)^2 + 0.4 |s| -> s = 2 - 0.4 / 0.5
        assert step.s_hat[0] == pytest.approx(1.2)

    def test_step_decreases_objective(self, rng):
        for fam in FAMILIES:
            B, x, beta = random_instance(fam, rng)
            cfg = EncodeConfig(beta=beta)
            s = np.zeros(B.shape[1])
            step = irls_step(fam, B, x, s, cfg)
            if step.accepted:
                assert master_objective(fam, B, x, step.s_next, beta) < master_objective(fam, B, x, s, beta)
                np.testing.assert_allclose(step.s_next, (1 - step.t) * s + step.t * step.s_hat)
            else:
                assert step.t == 0.0

    @pytest.mark.parametrize("fam", [BERNOULLI, POISSON], ids=str)
    def test_quadratic_model_fidelity(self, fam):
        rng = np.random.default_rng(99)
        B = rng.standard_normal((5, 3)) / 2
        x = np.atleast_1d(expfam.sample(fam, B @ rng.standard_normal(3), rng))
        s = 0.5 * rng.standard_normal(3)
        step = irls_step(fam, B, x, s, EncodeConfig(beta=0.2))
        w, z = step.weights, step.target

        def smooth(v):
            eta = B @ v
            return 2 * np.sum(expfam.log_partition(fam, eta) - x * eta)

        g_model = 2 * B.T @ (w * (B @ s - z))
        H_model = 2 * B.T @ (w[:, None] * B)
        g_fd = numeric_gradient(smooth, s)
        H_fd = numeric_hessian(smooth, s)
        assert np.max(np.abs(g_model - g_fd)) <= 1e-5 * np.max(np.abs(g_fd))
        assert np.max(np.abs(H_model - H_fd)) <= 1e-5 * np.max(np.abs(H_fd))


class TestEncodeExamples:
    def test_gaussian_identity_dictionary(self):
        code = encode(GAUSSIAN, np.eye(2), [1.0, 0.0], EncodeConfig(beta=0.5))
        np.testing.assert_allclose(code.s, [0.75, 0.0], atol=1e-14)
        assert code.converged

    @pytest.mark.parametrize(
        "fam,x,beta,closed_form",
        [
            (BERNOULLI, 1.0, 0.4, math.log(4)),
            (BERNOULLI, 1.0, 1.0, 0.0),
            (POISSON, 2.0, 0.2, math.log(1.9)),
        ],
    )
    def test_scalar_closed_forms(self, fam, x, beta, closed_form):
        grid_s, _ = grid_minimize_1d(scalar_F(fam, x, beta), -3.0, 3.0)
        assert grid_s == pytest.approx(closed_form, abs=1e-6)
        code = encode(fam, [[1.0]], [x], EncodeConfig(beta=beta))
        assert code.converged
        assert code.s[0] == pytest.approx(closed_form, abs=1e-5)
        assert code.s[0] == pytest.approx(grid_s, abs=1e-5)

    def test_empty_dictionary(self):
        with pytest.raises(InputError):
            encode(GAUSSIAN, np.zeros((0, 2)), [], EncodeConfig())
        with pytest.raises(InputError):
            encode(GAUSSIAN, np.zeros((2, 0)), [1.0, 2.0], EncodeConfig())

    def test_config_validation(self):
        for bad in [dict(beta=0), dict(epsilon=0), dict(ls_shrink=1.0), dict(max_iter=0)]:
            with pytest.raises(InputError):
                EncodeConfig(**bad)


class TestEncodeProperties:
    @pytest.mark.parametrize("fam", FAMILIES, ids=str)
    def test_monotone_descent(self, fam):
        rng = np.random.default_rng({"gaussian": 1, "bernoulli": 2, "poisson": 3}[fam.name])
        for _ in range(100):
            B, x, beta = random_instance(fam, rng)
            code = encode(fam, B, x, EncodeConfig(beta=beta))
            assert np.all(np.diff(code.objective_trace) < 0)
            assert np.all(np.isfinite(code.s))

    def test_gaussian_reduction(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            B, x, beta = random_instance(GAUSSIAN, rng)
            code = encode(GAUSSIAN, B, x, EncodeConfig(beta=beta))
            direct = solve_weighted_lasso(LassoProblem(B, x, np.ones(len(x)), beta))
            np.testing.assert_allclose(code.s, direct.s, atol=1e-6, rtol=0)

    @pytest.mark.parametrize("fam", FAMILIES, ids=str)
    def test_fixed_point_optimality(self, fam):
        rng = np.random.default_rng(5)
        cfg = EncodeConfig(beta=0.3)
        for _ in range(50):
            B, x, _ = random_instance(fam, rng)
            code = encode(fam, B, x, cfg)
            assert code.converged
            s = code.s
            g = 2 * B.T @ (np.atleast_1d(expfam.mean(fam, B @ s)) - x)
            nz = s != 0
            viol = np.concatenate(
                [np.abs(g[nz] + cfg.beta * np.sign(s[nz])), np.maximum(np.abs(g[~nz]) - cfg.beta, 0)]
            )
            assert viol.max() <= 10 * cfg.epsilon

    def test_determinism(self):
        rng = np.random.default_rng(6)
        B, x, beta = random_instance(POISSON, rng)
        a = encode(POISSON, B, x, EncodeConfig(beta=beta))
        b = encode(POISSON, B, x, EncodeConfig(beta=beta))
        assert a.objective_trace == b.objective_trace
        assert a.s.tobytes() == b.s.tobytes()

    def test_saturated_bernoulli_stays_finite(self):
        # curvature underflows for large eta; weights are clamped
        B = np.array([[30.0], [30.0]])
        code = encode(BERNOULLI, B, [1.0, 1.0], EncodeConfig(beta=1e-3))
        assert np.all(np.isfinite(code.s))
        assert np.all(np.diff(code.objective_trace) < 0)


@pytest.mark.parametrize("fam", FAMILIES, ids=str)
def test_batch_matches_serial_and_threads(fam):
    rng = np.random.default_rng(8)
    B = rng.standard_normal((6, 4)) / 2
    X = np.vstack([np.atleast_1d(expfam.sample(fam, B @ rng.standard_normal(4), rng)) for _ in range(12)])
    cfg = EncodeConfig(beta=0.2)
    serial = [encode(fam, B, x, cfg).s for x in X]
    batch0 = encode_batch(fam, B, X, cfg, threads=0)
    batch4 = encode_batch(fam, B, X, cfg, threads=4)
    for s, c0, c4 in zip(serial, batch0, batch4):
        assert s.tobytes() == c0.s.tobytes() == c4.s.tobytes()


def test_thread_env_var(monkeypatch):
    monkeypatch.setenv("STLCODE_THREADS", "3")
    B = np.eye(3)
    codes = encode_batch(GAUSSIAN, B, np.eye(3), EncodeConfig(beta=0.1))
    assert len(codes) == 3
    monkeypatch.setenv("STLCODE_THREADS", "lots")
    with pytest.raises(InputError):
        encode_batch(GAUSSIAN, B, np.eye(3), EncodeConfig(beta=0.1))
