import math

import numpy as np
import pytest

from varfast import (
    InsufficientData,
    Rng,
    fit_exponent,
    phase_sweep,
    select_degree,
)
from varfast.verify import (
    verify_attention_error,
    verify_inner_product,
    verify_mode_equivalence,
    verify_poly_lipschitz,
)


class TestFitExponent:
    def test_exact_quartic(self):
        rep = fit_exponent([(2, 16), (4, 256), (8, 4096)])
        assert rep.slope == pytest.approx(4.0, abs=1e-12)
        assert rep.residual == pytest.approx(0.0, abs=1e-12)

    def test_exact_quadratic(self):
        rep = fit_exponent([(2, 4), (4, 16), (8, 64)])
        assert rep.slope == pytest.approx(2.0, abs=1e-12)

    def test_insufficient_points(self):
        with pytest.raises(InsufficientData):
            fit_exponent([(2, 4), (4, 16)])

    def test_nonpositive_rejected(self):
        with pytest.raises(InsufficientData):
            fit_exponent([(2, 4), (4, 0), (8, 64)])


class TestBoundSuites:
    def test_poly_lipschitz_worked_example(self):
        # f(x) = x^2 on [-2, 2] between 1 and 1.1
        lhs = abs(1.0**2 - 1.1**2)
        rhs = (1.0 * 2 * 2.0) * abs(1.0 - 1.1)
        assert lhs == pytest.approx(0.21)
        assert rhs == pytest.approx(0.4)
        assert lhs <= rhs

    def test_poly_lipschitz_suite(self):
        rep = verify_poly_lipschitz(trials=400, seed=1)
        assert rep.violations == 0
        assert rep.max_ratio <= 1.0 + 1e-9

    def test_inner_product_worked_example(self):
        u = np.array([1.0, 1.0])
        v = np.array([1.0, 1.0])
        up = np.array([1.1, 1.0])
        lhs = abs(float(up @ v) - float(u @ v))
        rhs = 2 * 2 * 0.1 * 1.1
        assert lhs == pytest.approx(0.1)
        assert rhs == pytest.approx(0.44)
        assert lhs <= rhs

    def test_inner_product_suite(self):
        rep = verify_inner_product(trials=400, seed=2)
        assert rep.violations == 0

    def test_attention_error_suite(self):
        rep = verify_attention_error(trials=60, seed=3)
        assert rep.violations == 0
        assert rep.max_ratio < 4.0
        # both constant readings recorded per trial
        assert all("ratio_gplus2" in p for p in rep.trial_params)

    def test_mode_equivalence_suite(self):
        rep = verify_mode_equivalence(trials=5, seed=4)
        assert rep.violations == 0


class TestPhaseSweep:
    def test_tiny_c_needs_degree_zero(self):
        rows = phase_sweep(4096, [1e-4, 1e-3], 1e-3, 24, seed=0)
        assert rows[0].degree == 0

    def test_degree_monotone_under_doubling(self):
        cs = [0.02 * 2**i for i in range(5)]
        rows = phase_sweep(4096, cs, 1e-3, 24, seed=0)
        degs = [r.degree for r in rows if r.degree is not None]
        assert all(a <= b for a, b in zip(degs, degs[1:]))

    def test_feasible_rows_meet_budget(self):
        rows = phase_sweep(1024, [0.05, 0.2], 1e-3, 24, seed=0)
        for r in rows:
            assert r.status == "ok"
            # budget for the comparison: 2 delta ||V||_inf / (1 - delta)
            assert r.err <= 2 * 1e-3 * r.r_bound / (1 - 1e-3)

    def test_rejects_unsorted_c(self):
        with pytest.raises(ValueError):
            phase_sweep(4096, [0.2, 0.1], 1e-3, 24)

    def test_fail_rows_match_select_degree(self):
        rows = phase_sweep(4096, [1.5], 1e-3, 24, seed=0)
        assert rows[0].status == "FAIL"
        b = 4 * (1.5 * math.sqrt(math.log(4096))) ** 2
        with pytest.raises(Exception):
            select_degree(b, 1e-3, 24)


class TestDeterminism:
    def test_verifier_reports_reproducible(self):
        a = verify_poly_lipschitz(trials=50, seed=9)
        b = verify_poly_lipschitz(trials=50, seed=9)
        assert a.max_ratio == b.max_ratio
        assert a.trial_params == b.trial_params

    def test_thread_cap_does_not_change_results(self, monkeypatch):
        monkeypatch.setenv("VARFAST_THREADS", "4")
        a = verify_inner_product(trials=80, seed=10)
        monkeypatch.setenv("VARFAST_THREADS", "1")
        b = verify_inner_product(trials=80, seed=10)
        assert a.max_ratio == b.max_ratio
        assert a.violations == b.violations == 0

    def test_rng_streams_disjoint_across_trials(self):
        draws = {tuple(Rng(0, 10_000_000 + i).uniform(0, 1, 3)) for i in range(20)}
        assert len(draws) == 20
