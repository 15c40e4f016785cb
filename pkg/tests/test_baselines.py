import math

import numpy as np
import pytest

from votebound import baselines as bl
from votebound.errors import DomainError, NumericError
from votebound.objectives import softmax
from votebound.specfun import reg_inc_beta
from votebound.voters import ErrorMatrix

from conftest import vec_rel_err


def random_instance(rng, n=30, m=5):
    return ErrorMatrix(rng.random((n, m)) < 0.4), rng.dirichlet(np.ones(m))


class TestKlCategorical:
    def test_identical(self):
        assert bl.kl_categorical([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_point_mass_vs_uniform(self):
        assert bl.kl_categorical([1, 0, 0, 0], [0.25] * 4) == pytest.approx(math.log(4), rel=1e-12)

    def test_direct_formula(self):
        expected = 0.7 * math.log(1.4) + 0.3 * math.log(0.6)
        assert bl.kl_categorical([0.7, 0.3], [0.5, 0.5]) == pytest.approx(expected, rel=1e-12)

    def test_zero_prior_mass(self):
        with pytest.raises(DomainError):
            bl.kl_categorical([0.5, 0.5], [1.0, 0.0])


class TestRiskEnumeration:
    def test_gibbs_matches_double_sum(self, rng):
        errs, theta = random_instance(rng)
        e = errs.matrix.astype(float)
        brute = sum(
            theta[j] * e[i, j] for i in range(errs.n_examples) for j in range(theta.size)
        ) / errs.n_examples
        assert bl.gibbs_risk(theta, errs)[0] == pytest.approx(brute, abs=1e-12)

    def test_tandem_matches_pair_enumeration(self, rng):
        errs, theta = random_instance(rng)
        e = errs.matrix.astype(float)
        brute = sum(
            theta[j] * theta[k] * e[i, j] * e[i, k]
            for i in range(errs.n_examples)
            for j in range(theta.size)
            for k in range(theta.size)
        ) / errs.n_examples
        assert bl.tandem_risk(theta, errs)[0] == pytest.approx(brute, abs=1e-12)

    def test_tandem_below_gibbs(self, rng):
        for _ in range(30):
            errs, theta = random_instance(rng)
            assert bl.tandem_risk(theta, errs)[0] <= bl.gibbs_risk(theta, errs)[0] + 1e-14

    def test_identical_voters_tandem_equals_gibbs(self, rng):
        col = rng.random(40) < 0.3
        errs = ErrorMatrix(np.column_stack([col, col, col]))
        theta = rng.dirichlet(np.ones(3))
        assert bl.tandem_risk(theta, errs)[0] == pytest.approx(
            bl.gibbs_risk(theta, errs)[0], abs=1e-12
        )

    def test_decorrelated_voters_tandem_is_gibbs_over_m(self):
        m = 6
        errs = ErrorMatrix(np.eye(m, dtype=bool))
        theta = np.full(m, 1.0 / m)
        r1 = bl.gibbs_risk(theta, errs)[0]
        r2 = bl.tandem_risk(theta, errs)[0]
        assert r2 == pytest.approx(r1 / m, abs=1e-14)


class TestBinomialLoss:
    def test_endpoints(self):
        assert bl.binomial_loss(0.0, 10) == 0.0
        assert bl.binomial_loss(1.0, 10) == 1.0

    def test_small_case(self):
        assert bl.binomial_loss(0.5, 2) == pytest.approx(0.75, abs=1e-12)

    def test_log_space_oracle(self):
        # direct 64-bit log-space summation with exact integer binomials
        w, n_draws = 0.3, 100
        total = 0.0
        for k in range(n_draws // 2, n_draws + 1):
            total += math.comb(n_draws, k) * w**k * (1 - w) ** (n_draws - k)
        assert bl.binomial_loss(w, n_draws) == pytest.approx(total, abs=1e-10)

    def test_beta_cdf_identity(self, rng):
        # the upper binomial tail equals a regularized incomplete beta value
        for _ in range(20):
            w = rng.uniform(0.01, 0.99)
            n_draws = 2 * int(rng.integers(1, 60))
            j = n_draws // 2
            assert bl.binomial_loss(w, n_draws) == pytest.approx(
                reg_inc_beta(w, j, n_draws - j + 1), abs=1e-12
            )

    def test_monotone_in_w(self, rng):
        w = np.sort(rng.uniform(0, 1, 20))
        vals = bl.binomial_loss(w, 10)
        assert np.all(np.diff(vals) >= -1e-15)

    def test_odd_n_rejected(self):
        with pytest.raises(DomainError):
            bl.binomial_loss(0.5, 7)


class TestCBound:
    def test_point_mass_reduction(self, rng):
        # all weight on one voter of risk r gives 4 r (1 - r)
        col = rng.random(50) < 0.37
        errs = ErrorMatrix(np.column_stack([col, rng.random(50) < 0.5]))
        risk = col.mean()
        assert bl.c_bound_value([1.0, 0.0], errs) == pytest.approx(4 * risk * (1 - risk), abs=1e-12)

    def test_perfect_ensemble(self):
        errs = ErrorMatrix(np.zeros((10, 2), dtype=bool))
        assert bl.c_bound_value([0.5, 0.5], errs) == 0.0

    def test_brute_force_moments(self, rng):
        errs, theta = random_instance(rng)
        e = errs.matrix.astype(float)
        w = e @ theta
        num = (w**2).mean() - sum(theta[j] * e[:, j].mean() ** 2 for j in range(theta.size))
        den = (w**2).mean() - w.mean() + 0.25
        assert bl.c_bound_value(theta, errs) == pytest.approx(num / den, abs=1e-12)

    def test_degenerate_denominator(self):
        errs = ErrorMatrix(np.array([[True, False], [False, True]]))
        with pytest.raises(NumericError):
            bl.c_bound_value([0.5, 0.5], errs)


class TestObjectives:
    def test_first_order_trivial_cases(self, rng):
        perfect = ErrorMatrix(np.column_stack([np.zeros(20, bool), rng.random(20) < 0.5]))
        res = bl.first_order_objective([1.0, 0.0], perfect, 20, 0.05)
        assert res.empirical_risk == 0.0
        half = ErrorMatrix(np.column_stack([np.zeros(20, bool), np.ones(20, bool)]))
        res = bl.first_order_objective([0.5, 0.5], half, 20, 0.05)
        assert res.empirical_risk == pytest.approx(0.5, abs=1e-14)

    def test_second_order_half_weight(self):
        # exactly one of two voters errs per example, so W is identically 1/2
        errs = ErrorMatrix(np.array([[True, False], [False, True], [True, False]]))
        res = bl.second_order_objective([0.5, 0.5], errs, 3, 0.05)
        assert res.empirical_risk == pytest.approx(0.25, abs=1e-14)

    @pytest.mark.parametrize("kind", ["fo", "so", "bin"])
    def test_gradients_through_softmax(self, kind, rng):
        errs, _ = random_instance(rng, n=25, m=6)
        logits = rng.normal(0, 0.5, 6)
        build = {
            "fo": lambda t: bl.first_order_objective(t, errs, 200, 0.05),
            "so": lambda t: bl.second_order_objective(t, errs, 200, 0.05),
            "bin": lambda t: bl.binomial_objective(t, errs, 100, 200, 0.05),
        }[kind]
        res = build(softmax(logits))
        theta = softmax(logits)
        grad_logits = theta * (res.gradient - theta @ res.gradient)
        fd = np.empty(6)
        for j in range(6):
            # h large enough that the KL-inversion bisection tolerance (1e-9)
            # stays below the 1e-4 gradient tolerance
            h = 1e-3
            up, dn = logits.copy(), logits.copy()
            up[j] += h
            dn[j] -= h
            fd[j] = (build(softmax(up)).value - build(softmax(dn)).value) / (2 * h)
        assert vec_rel_err(grad_logits, fd) < 1e-4

    def test_certificate_is_clipped_objective(self, rng):
        errs, theta = random_instance(rng, n=10, m=4)
        res = bl.second_order_objective(theta, errs, 10, 0.05)
        assert res.certificate == min(res.value, 1.0)


class TestInformedBaseline:
    def test_gradients_and_value(self, rng):
        e1 = ErrorMatrix(rng.random((12, 3)) < 0.35)
        e2 = ErrorMatrix(rng.random((12, 4)) < 0.35)
        u1 = rng.normal(0, 0.3, 4)
        u2 = rng.normal(0, 0.3, 3)

        def evaluate(x1, x2):
            return bl.informed_baseline_certificate(
                "fo", softmax(x1), softmax(x2), e1, e2, 24, 12, 0.5, 0.05
            )

        cert, g1, g2, q, kl1, kl2 = evaluate(u1, u2)
        assert cert >= 2 * q - 1e-9
        t1, t2 = softmax(u1), softmax(u2)
        gl1 = t1 * (g1 - t1 @ g1)
        fd = np.empty(4)
        for j in range(4):
            h = 1e-4
            up, dn = u1.copy(), u1.copy()
            up[j] += h
            dn[j] -= h
            fd[j] = (evaluate(up, u2)[0] - evaluate(dn, u2)[0]) / (2 * h)
        assert vec_rel_err(gl1, fd) < 1e-3
