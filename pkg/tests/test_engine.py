import math

import numpy as np
import pytest

from dprob import (CandidateModel, KernelConfig, enumerate_subsets, evidence_label,
                   fit_candidate, fit_reference, from_arrays, kl1_analytic,
                   kl2_analytic, kl_estimate, make_report)
from dprob.models import ModelFit

from mc_oracles import mc_kl1, mc_kl2


def make_fit(**kw):
    base = dict(trHj=2.0, logdet_IplusHj=2 * math.log(2.0), rssj=10.0,
                qform_diff=0.0, qform_pred=0.0, trace_pred=30.0, p_j=1)
    base.update(kw)
    return ModelFit(**base)


@pytest.fixture(scope="module")
def univariate_problem():
    rng = np.random.default_rng(123)
    x = rng.uniform(size=30)
    y = 1.0 + 2.0 * x + rng.normal(0.0, 0.7, size=30)
    ds = from_arrays(x, y)
    cfg = KernelConfig(np.array([0.4]), 2.0)
    ref = fit_reference(ds.X, ds.y, cfg)
    return ds, cfg, ref


class TestKl1Analytic:
    def test_collapses_when_reference_equals_candidate(self):
        # H := H_j and tr H := tr H_j with matching residuals: the
        # goodness-of-fit term reduces to (n/2)(trHj + 2)/(n - 2)
        n, r = 30, 4.2
        fit = make_fit(rssj=r)
        g1, p1 = kl1_analytic(fit, trH=fit.trHj, rss0=r, n=n)
        assert g1 == pytest.approx(0.5 * n * (fit.trHj + 2.0) / (n - 2.0), rel=1e-12)
        assert p1 == fit.trHj / 2.0

    def test_interpolating_candidate_rejected(self):
        with pytest.raises(ValueError, match="interpolates"):
            kl1_analytic(make_fit(rssj=0.0), trH=1.0, rss0=1.0, n=10)

    def test_matches_posterior_sampling_oracle(self, univariate_problem):
        ds, cfg, ref = univariate_problem
        model = CandidateModel((0,))
        fit = fit_candidate(ds, model, ref)
        est = kl_estimate(fit, ref.trH, ref.logdet_IplusH, ref.rss0, ds.n)
        mc, se = mc_kl1(ds.X, ds.y, cfg, model.subset, draws=60_000, seed=99)
        assert abs(est.kl1 - mc) <= 3.0 * se


class TestKl2Analytic:
    def test_flat_penalty(self):
        fit = make_fit(trHj=3.0, logdet_IplusHj=3 * math.log(2.0), p_j=2)
        _, p2 = kl2_analytic(fit, logdet_IplusH=0.0, rss0=10.0, n=20)
        assert p2 == pytest.approx(1.5 * math.log(2.0), rel=1e-15)

    def test_matches_posterior_sampling_oracle(self, univariate_problem):
        ds, cfg, ref = univariate_problem
        model = CandidateModel((0,))
        fit = fit_candidate(ds, model, ref)
        est = kl_estimate(fit, ref.trH, ref.logdet_IplusH, ref.rss0, ds.n)
        mc, se = mc_kl2(ds.X, ds.y, cfg, model.subset, draws=400_000, seed=100)
        assert abs(est.kl2 - mc) <= 3.0 * se

    def test_kl2_below_kl1_on_random_problems(self):
        rng = np.random.default_rng(17)
        for _ in range(15):
            n = int(rng.integers(15, 45))
            p = int(rng.integers(1, 4))
            X = rng.uniform(size=(n, p))
            y = rng.normal(size=n) + X @ rng.normal(size=p)
            ds = from_arrays(X, y)
            cfg = KernelConfig(rng.uniform(0.1, 2.0, size=p), rng.uniform(0.3, 4.0))
            ref = fit_reference(ds.X, ds.y, cfg)
            for model in enumerate_subsets(p):
                fit = fit_candidate(ds, model, ref)
                est = kl_estimate(fit, ref.trH, ref.logdet_IplusH, ref.rss0, n)
                assert est.kl2 <= est.kl1 + 1e-10

    def test_nonnegative_on_random_problems(self):
        rng = np.random.default_rng(18)
        for _ in range(15):
            n = int(rng.integers(12, 40))
            X = rng.uniform(size=(n, 2))
            y = rng.normal(size=n)
            ds = from_arrays(X, y)
            cfg = KernelConfig(rng.uniform(0.05, 3.0, size=2), rng.uniform(0.2, 5.0))
            ref = fit_reference(ds.X, ds.y, cfg)
            for model in enumerate_subsets(2):
                fit = fit_candidate(ds, model, ref)
                est = kl_estimate(fit, ref.trH, ref.logdet_IplusH, ref.rss0, n)
                assert est.kl1 >= 0.0 and est.kl2 >= 0.0

    def test_decomposition_identity(self, univariate_problem):
        ds, cfg, ref = univariate_problem
        for model in enumerate_subsets(1):
            fit = fit_candidate(ds, model, ref)
            est = kl_estimate(fit, ref.trH, ref.logdet_IplusH, ref.rss0, ds.n)
            assert est.kl1 * ds.n == pytest.approx(est.g1 + est.p1, abs=1e-10)
            assert est.kl2 * ds.n == pytest.approx(est.g2 + est.p2, abs=1e-10)
            assert est.p1 == pytest.approx(fit.trHj / 2.0, abs=1e-15)
            assert est.p2 == pytest.approx(fit.logdet_IplusHj / 2.0, abs=1e-15)


class TestEvidenceLabels:
    def test_thresholds(self):
        assert evidence_label(math.log(1e-22)) == "very strong"
        assert evidence_label(math.log(1.0 / 100.0)) == "strong"
        assert evidence_label(math.log(1.0 / 10.0)) == "positive"
        assert evidence_label(math.log(0.5)) == "bare mention"
        # boundaries belong to the weaker-evidence bucket
        assert evidence_label(math.log(1.0 / 150.0)) == "strong"
        assert evidence_label(math.log(1.0 / 20.0)) == "positive"
        assert evidence_label(math.log(1.0 / 3.0)) == "bare mention"


def report_for(kl_pairs, n=50):
    from dprob import KlEstimate
    models = [CandidateModel((j,)) for j in range(len(kl_pairs))]
    names = tuple(f"x{j}" for j in range(len(kl_pairs)))
    kls = [KlEstimate(kl1=sum(a) / n, kl2=sum(b) / n, g1=a[0], p1=a[1],
                      g2=b[0], p2=b[1]) for a, b in kl_pairs]
    return make_report(models, kls, names, n)


class TestMakeReport:
    def test_single_model_gets_unit_weight(self):
        rep = report_for([((500.0, 1.0), (400.0, 0.7))])
        assert rep.cond_1[0] == pytest.approx(1.0)
        assert rep.cond_2[0] == pytest.approx(1.0)

    def test_equal_divergences_split_evenly(self):
        rep = report_for([((3.0, 1.0), (2.0, 0.7))] * 2)
        np.testing.assert_allclose(rep.cond_1, [0.5, 0.5], atol=1e-15)
        np.testing.assert_allclose(rep.cond_2, [0.5, 0.5], atol=1e-15)

    def test_tiny_absolute_weight_is_very_strong_evidence(self):
        rep = report_for([((0.5 * 22 * math.log(10.0), 1.0), (2.0, 0.7))] * 2)
        assert rep.evidence[0] == "very strong"

    def test_conditional_weights_sum_to_one(self):
        rng = np.random.default_rng(20)
        pairs = [((float(rng.uniform(0, 60)), 1.0), (float(rng.uniform(0, 60)), 0.7))
                 for _ in range(17)]
        rep = report_for(pairs)
        assert abs(rep.cond_1.sum() - 1.0) <= 1e-12
        assert abs(rep.cond_2.sum() - 1.0) <= 1e-12

    def test_shift_invariance_of_conditional_weights(self):
        # algebraically exact; the float subtraction of the normalizer at a
        # different magnitude leaves ~1e-14 noise, so assert at 1e-13
        rng = np.random.default_rng(21)
        gs = rng.uniform(0.0, 40.0, size=9)
        pairs = [((float(g), 1.0), (float(g), 0.7)) for g in gs]
        shifted = [((float(g) + 123.456, 1.0), (float(g) + 123.456, 0.7)) for g in gs]
        a = report_for(pairs)
        b = report_for(shifted)
        np.testing.assert_allclose(a.cond_1, b.cond_1, atol=1e-13)
        np.testing.assert_allclose(a.cond_2, b.cond_2, atol=1e-13)

    def test_inclusion_probabilities_sum_members(self):
        rng = np.random.default_rng(22)
        x = rng.uniform(size=25)
        y = rng.normal(size=25)
        ds = from_arrays(np.column_stack([x, rng.uniform(size=25)]), y,
                         names=("a", "b"))
        cfg = KernelConfig(np.array([0.5, 0.5]), 1.0)
        ref = fit_reference(ds.X, ds.y, cfg)
        models = enumerate_subsets(2)
        kls = [kl_estimate(fit_candidate(ds, m, ref), ref.trH, ref.logdet_IplusH,
                           ref.rss0, ds.n) for m in models]
        rep = make_report(models, kls, ds.names, ds.n)
        expect_a = sum(rep.cond_1[i] for i, m in enumerate(models) if 0 in m.subset)
        assert rep.inclusion["a"][0] == pytest.approx(expect_a, abs=1e-14)

    def test_nested_penalty_differences(self, univariate_problem):
        ds, cfg, ref = univariate_problem
        null = fit_candidate(ds, CandidateModel(()), ref)
        full = fit_candidate(ds, CandidateModel((0,)), ref)
        e0 = kl_estimate(null, ref.trH, ref.logdet_IplusH, ref.rss0, ds.n)
        e1 = kl_estimate(full, ref.trH, ref.logdet_IplusH, ref.rss0, ds.n)
        # smaller model j', larger model j: P_{j',t} - P_{j,t}
        assert e0.p1 - e1.p1 == pytest.approx((null.p_j - full.p_j) / 2.0, abs=1e-15)
        assert e0.p2 - e1.p2 == pytest.approx(
            math.log(2.0) * (null.p_j - full.p_j) / 2.0, abs=1e-15)

    def test_csv_and_json(self, tmp_path, univariate_problem):
        ds, cfg, ref = univariate_problem
        models = enumerate_subsets(1)
        kls = [kl_estimate(fit_candidate(ds, m, ref), ref.trH, ref.logdet_IplusH,
                           ref.rss0, ds.n) for m in models]
        rep = make_report(models, kls, ds.names, ds.n)
        rep.write_csv(tmp_path / "report.csv")
        rep.write_inclusion_csv(tmp_path / "inclusion.csv")
        header = open(tmp_path / "report.csv").readline().strip()
        assert header == "model,log_pi1,log_pi2,cond_pi1,cond_pi2,evidence"
        import json
        d = json.loads(rep.to_json())
        assert len(d["models"]) == 2
