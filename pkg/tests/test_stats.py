import math

import numpy as np
import pytest
from scipy.stats import kstwobign

from zerohit.core import DomainError, InsufficientDataError
from zerohit.stats import (EmpiricalDist, TestReport, chi2_binned, ecdf_eval,
                           kolmogorov_sf, ks_one_sample, ks_two_sample,
                           tail_exponent_fit, tolerance_report)


class TestEmpiricalDist:
    def test_from_sample_sorts(self):
        d = EmpiricalDist.from_sample([3.0, 1.0, 2.0])
        assert np.array_equal(d.sorted_values, [1.0, 2.0, 3.0])
        assert d.n == 3

    def test_rejects_unsorted(self):
        with pytest.raises(DomainError):
            EmpiricalDist(sorted_values=np.array([2.0, 1.0]))

    def test_ecdf_values(self):
        d = EmpiricalDist.from_sample([1, 2, 3])
        assert ecdf_eval(d, 2.0) == pytest.approx(2 / 3)
        assert ecdf_eval(d, 0.5) == 0.0
        assert ecdf_eval(d, 3.0) == 1.0
        assert ecdf_eval(d, 10.0) == 1.0

    def test_ecdf_right_continuous_monotone(self):
        d = EmpiricalDist.from_sample([1.0, 1.0, 2.0])
        xs = np.linspace(0, 3, 50)
        vals = ecdf_eval(d, xs)
        assert np.all(np.diff(vals) >= 0)
        assert ecdf_eval(d, 1.0) == pytest.approx(2 / 3)  # jump included


class TestKolmogorovSf:
    def test_against_reference_tail(self):
        for t in (0.3, 0.5, 0.8, 1.0, 1.4, 2.0):
            assert kolmogorov_sf(t) == pytest.approx(kstwobign.sf(t),
                                                     abs=1e-9)

    def test_limits(self):
        assert kolmogorov_sf(0.0) == 1.0
        assert kolmogorov_sf(5.0) < 1e-20


class TestKsOneSample:
    def test_exact_quantiles_statistic(self):
        n = 1000
        d = EmpiricalDist.from_sample((np.arange(1, n + 1) - 0.5) / n)
        rep = ks_one_sample(d, lambda v: np.clip(v, 0, 1))
        assert rep.statistic == pytest.approx(1 / (2 * n), abs=1e-12)

    def test_power_against_shift(self):
        rng = np.random.default_rng(0)
        x = rng.random(10_000)
        rep = ks_one_sample(EmpiricalDist.from_sample(x),
                            lambda v: np.clip(v - 0.1, 0, 1))
        assert rep.p_value < 1e-6 and not rep.passed

    def test_null_p_values_roughly_uniform(self):
        # calibration across 100 seeds; then a KS test on the p-values
        ps = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            d = EmpiricalDist.from_sample(rng.random(2000))
            ps.append(ks_one_sample(d, lambda v: np.clip(v, 0, 1)).p_value)
        rep = ks_one_sample(EmpiricalDist.from_sample(ps),
                            lambda v: np.clip(v, 0, 1))
        assert rep.passed
        frac_small = np.mean(np.asarray(ps) < 0.05)
        assert abs(frac_small - 0.05) < 0.05

    def test_invariance_under_monotone_transform(self):
        rng = np.random.default_rng(4)
        x = rng.random(5000)
        d1 = EmpiricalDist.from_sample(x)
        d2 = EmpiricalDist.from_sample(x ** 3)
        r1 = ks_one_sample(d1, lambda v: np.clip(v, 0, 1))
        r2 = ks_one_sample(d2, lambda v: np.clip(np.cbrt(v), 0, 1))
        assert r1.statistic == pytest.approx(r2.statistic, abs=1e-12)

    def test_small_sample_warning(self):
        d = EmpiricalDist.from_sample(np.linspace(0.1, 0.9, 20))
        rep = ks_one_sample(d, lambda v: np.clip(v, 0, 1))
        assert "asymptotic p-value unreliable" in rep.notes


class TestKsTwoSample:
    def test_identical_samples(self):
        d = EmpiricalDist.from_sample([1, 2, 3])
        rep = ks_two_sample(d, d)
        assert rep.statistic == 0.0 and rep.p_value == 1.0

    def test_disjoint_supports(self):
        rep = ks_two_sample(EmpiricalDist.from_sample([1, 2]),
                            EmpiricalDist.from_sample([3, 4]))
        assert rep.statistic == 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a = EmpiricalDist.from_sample(rng.random(400))
        b = EmpiricalDist.from_sample(rng.random(600))
        r1, r2 = ks_two_sample(a, b), ks_two_sample(b, a)
        assert r1.statistic == r2.statistic
        assert r1.p_value == r2.p_value

    def test_null_calibration_over_seeds(self):
        passes = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            a = EmpiricalDist.from_sample(rng.standard_normal(5000))
            b = EmpiricalDist.from_sample(rng.standard_normal(5000))
            passes += ks_two_sample(a, b).passed
        assert passes >= 18

    def test_tied_values_handled(self):
        a = EmpiricalDist.from_sample([1.0, 1.0, 2.0, 2.0])
        b = EmpiricalDist.from_sample([1.0, 2.0, 2.0, 2.0])
        rep = ks_two_sample(a, b)
        assert rep.statistic == pytest.approx(0.25)


class TestChi2Binned:
    def test_uniform_self_consistency(self):
        rng = np.random.default_rng(2)
        d = EmpiricalDist.from_sample(rng.random(50_000))
        edges = np.linspace(0, 1, 51)
        rep = chi2_binned(d, np.diff(edges), edges)
        assert rep.passed
        assert "dof=49" in rep.notes

    def test_detects_wrong_law(self):
        rng = np.random.default_rng(3)
        d = EmpiricalDist.from_sample(rng.random(20_000) ** 2)
        edges = np.linspace(0, 1, 21)
        rep = chi2_binned(d, np.diff(edges), edges)
        assert not rep.passed and rep.p_value < 1e-10

    def test_near_delta_density_error_path(self):
        # all mass concentrated in one bin: sparse bins cannot be merged
        d = EmpiricalDist.from_sample(np.full(100, 0.5))
        edges = np.linspace(0, 1, 11)
        masses = np.full(10, 1e-9)
        masses[5] = 1 - 9e-9
        with pytest.raises(InsufficientDataError):
            chi2_binned(d, masses, edges, merge_sparse=False)

    def test_sparse_bins_merged(self):
        rng = np.random.default_rng(5)
        d = EmpiricalDist.from_sample(rng.random(200))
        edges = np.linspace(0, 1, 101)  # 2 expected per bin: forces merging
        rep = chi2_binned(d, np.diff(edges), edges)
        assert rep.p_value > 0  # ran to completion on merged bins

    def test_edge_count_mismatch(self):
        d = EmpiricalDist.from_sample([0.5])
        with pytest.raises(DomainError):
            chi2_binned(d, np.array([1.0]), np.array([0.0, 0.5, 1.0]))


class TestTailExponentFit:
    def test_pareto_slope(self):
        rng = np.random.default_rng(6)
        d = EmpiricalDist.from_sample(1.0 / rng.random(200_000))
        slope, intercept, stderr = tail_exponent_fit(d, 10.0)
        assert slope == pytest.approx(-1.0, abs=0.05)
        assert math.exp(intercept) == pytest.approx(1.0, rel=0.1)
        assert stderr < 0.05

    def test_too_few_points(self):
        d = EmpiricalDist.from_sample(np.linspace(0, 1, 500))
        with pytest.raises(InsufficientDataError):
            tail_exponent_fit(d, 0.999)


class TestTestReport:
    def test_json_shape(self):
        rep = TestReport(kind="ks1", statistic=0.01, p_value=0.5, n=100,
                         claim="c")
        j = rep.to_json_dict()
        assert set(j) == {"kind", "statistic", "p_value", "n", "pass",
                          "notes", "claim"}
        assert j["pass"] is True

    def test_pass_iff_p_above_alpha(self):
        assert not TestReport(kind="ks1", statistic=1, p_value=0.005,
                              n=10, alpha=0.01).passed
        assert TestReport(kind="ks1", statistic=1, p_value=0.02,
                          n=10, alpha=0.01).passed

    def test_inverted_negative_control(self):
        rep = TestReport(kind="ks2", statistic=1, p_value=1e-9, n=(5, 5),
                         invert=True)
        assert rep.passed

    def test_tolerance_report(self):
        ok = tolerance_report(statistic=0.01, ok=True, n=10, claim="t")
        bad = tolerance_report(statistic=0.5, ok=False, n=10, claim="t")
        assert ok.passed and not bad.passed
        assert "pseudo p-value" in ok.notes

    def test_invalid_p_value(self):
        with pytest.raises(DomainError):
            TestReport(kind="ks1", statistic=0.0, p_value=1.5, n=1)
