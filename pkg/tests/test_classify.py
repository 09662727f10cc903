"""Conditional risk on rare regions: estimators, oracles, decomposition."""

import numpy as np
import pytest

from tailvc import (
    AxisClassifier,
    ClassifierFamily,
    ConfigurationError,
    DataError,
    ExplicitRegion,
    LabeledGenerator,
    LabeledSample,
    PreconditionError,
    QuantileRegion,
    axis_threshold_family,
    empirical_conditional_risk,
    erm,
    independence,
    rate_experiment_classification,
    risk_decomposition_check,
    true_conditional_risk,
)
from tailvc.classify import feature_norm, sup_norm_tail_quantile
from tailvc.rng import substream


def toy_generator(noise=0.1, d=2):
    return LabeledGenerator(
        feature_model=independence(d),
        rule=AxisClassifier(coord=0, threshold=0.5),
        noise=noise,
    )


def fixed_sample(n=10, d=2, seed=0, labeler=None, force_labels=None):
    rng = substream(seed, "fixed")
    x = rng.random((n, d))
    if force_labels is not None:
        y = force_labels
    else:
        y = (labeler or AxisClassifier(0, 0.5)).predict(x)
    return LabeledSample(features=x, labels=y)


class TestEmpiricalRisk:
    def test_always_correct_is_zero(self):
        g = AxisClassifier(0, 0.5)
        data = fixed_sample(n=50, labeler=g)
        region = QuantileRegion(alpha=0.2, norm="linf")
        assert empirical_conditional_risk(data, g, region) == 0.0

    def test_always_wrong_strict_threshold_count(self):
        g = AxisClassifier(0, 0.5)
        data = fixed_sample(n=10, labeler=g)
        flipped = LabeledSample(features=data.features, labels=-data.labels)
        region = QuantileRegion(alpha=0.3, norm="linf")
        # floor(10 * 0.3) = 3 tail rows, the threshold row itself excluded
        assert empirical_conditional_risk(flipped, g, region) == pytest.approx(
            2 / 3
        )

    def test_whole_space_region_reduces_to_error_rate(self):
        g = AxisClassifier(0, 0.5)
        data = fixed_sample(n=40, labeler=g)
        flipped = LabeledSample(features=data.features, labels=-data.labels)
        region = ExplicitRegion(norm="linf", threshold=0.0, q=1.0)
        assert empirical_conditional_risk(flipped, g, region) == 1.0

    def test_norm_tie_rejected(self):
        x = np.array([[0.5, 0.1], [0.5, 0.2], [0.9, 0.3], [0.3, 0.25]])
        data = LabeledSample(features=x, labels=np.array([1, 1, -1, -1]))
        with pytest.raises(DataError):
            empirical_conditional_risk(
                data, AxisClassifier(0, 0.5), QuantileRegion(alpha=0.5, norm="linf")
            )

    def test_empty_tail_rejected(self):
        data = fixed_sample(n=5)
        with pytest.raises(PreconditionError):
            empirical_conditional_risk(
                data, AxisClassifier(0, 0.5), QuantileRegion(alpha=0.1, norm="l2")
            )

    def test_value_in_unit_interval(self):
        rng = substream(1, "unit")
        for t in range(20):
            data = toy_generator().sample(50, substream(2, "u", t))
            g = AxisClassifier(int(rng.integers(0, 2)), float(rng.uniform(0, 1)))
            v = empirical_conditional_risk(
                data, g, QuantileRegion(alpha=0.25, norm="l2")
            )
            assert 0.0 <= v <= 1.0


class TestTrueRisk:
    def test_bayes_rule_of_noiseless_generator(self):
        gen = toy_generator(noise=0.0)
        res = true_conditional_risk(
            gen, gen.rule, QuantileRegion(alpha=0.2, norm="linf")
        )
        assert res.method == "analytic"
        assert res.value == 0.0

    def test_fair_coin_labels_give_half(self):
        gen = toy_generator(noise=0.5)
        for g in (AxisClassifier(0, 0.3), AxisClassifier(1, 0.8)):
            res = true_conditional_risk(
                gen, g, QuantileRegion(alpha=0.3, norm="linf")
            )
            assert res.value == pytest.approx(0.5, abs=1e-12)

    def test_true_rule_risk_equals_noise(self):
        gen = toy_generator(noise=0.1)
        res = true_conditional_risk(
            gen, gen.rule, QuantileRegion(alpha=0.2, norm="linf")
        )
        assert res.value == pytest.approx(0.1, abs=1e-12)

    def test_reference_path_agrees_with_independent_estimate(self):
        gen = toy_generator(noise=0.1)
        g = AxisClassifier(1, 0.7)
        assert (
            true_conditional_risk(gen, g, QuantileRegion(alpha=0.2, norm="linf"))
            .method
            == "analytic"
        )
        region_l2 = QuantileRegion(alpha=0.2, norm="l2")
        ref = true_conditional_risk(
            gen, g, region_l2, reference_draws=400_000, reference_seed=5
        )
        assert ref.method == "reference"
        assert ref.stderr > 0
        # independent estimate with its own seed and true-quantile plug-in
        data = gen.sample(1_000_000, substream(1234, "l2-check"))
        norms = feature_norm(data.features, "l2")
        t = np.quantile(norms, 0.8)
        emp = ((data.labels != g.predict(data.features)) & (norms > t)).mean() / 0.2
        indep_se = np.sqrt(emp * 0.2 * (1 - emp * 0.2) / 1_000_000) / 0.2
        assert abs(ref.value - emp) < 4 * (ref.stderr + indep_se)

    def test_montecarlo_validates_analytic_joint(self):
        gen = toy_generator(noise=0.15)
        g = AxisClassifier(1, 0.6)
        region = QuantileRegion(alpha=0.25, norm="linf")
        analytic = true_conditional_risk(gen, g, region).value
        rng = substream(77, "mc-risk")
        data = gen.sample(400_000, rng)
        t_alpha = sup_norm_tail_quantile(0.25, 2)
        tail = feature_norm(data.features, "linf") > t_alpha
        emp = ((data.labels != g.predict(data.features)) & tail).mean() / 0.25
        assert emp == pytest.approx(analytic, abs=0.01)


class TestErm:
    def test_perfect_member_wins(self):
        gen = toy_generator(noise=0.0)
        data = gen.sample(500, substream(3, "erm"))
        family = ClassifierFamily(
            members=(AxisClassifier(1, 0.9), gen.rule, AxisClassifier(0, 0.05)),
            vc_dim=2,
        )
        region = QuantileRegion(alpha=0.2, norm="linf")
        assert erm(data, family, region) == 1

    def test_tie_breaks_to_lowest_index(self):
        g = AxisClassifier(0, 0.5)
        family = ClassifierFamily(members=(g, AxisClassifier(0, 0.5)), vc_dim=2)
        data = toy_generator().sample(100, substream(4, "tie"))
        region = QuantileRegion(alpha=0.2, norm="linf")
        assert erm(data, family, region) == 0

    def test_matches_exhaustive_argmin(self):
        gen = toy_generator(noise=0.2)
        data = gen.sample(400, substream(5, "argmin"))
        family = axis_threshold_family(2, 10)
        region = QuantileRegion(alpha=0.25, norm="linf")
        risks = [
            empirical_conditional_risk(data, g, region) for g in family.members
        ]
        assert erm(data, family, region) == int(np.argmin(risks))

    def test_serialization_roundtrip(self):
        family = axis_threshold_family(2, 3)
        text = family.serialize()
        back = ClassifierFamily.deserialize(text, vc_dim=2)
        assert back.members == family.members


class TestRateExperiment:
    def test_single_member_family_matches_direct(self):
        gen = toy_generator(noise=0.1)
        g = AxisClassifier(0, 0.5)
        family = ClassifierFamily(members=(g,), vc_dim=2)
        schedule = [(1000, 0.1)]
        rep = rate_experiment_classification(gen, family, schedule, 5, seed=6)
        region = QuantileRegion(alpha=0.1, norm="linf")
        truth = true_conditional_risk(gen, g, region).value
        data = gen.sample(1000, substream(6, "class-rate", 100, 0))
        direct = abs(empirical_conditional_risk(data, g, region) - truth)
        assert rep.records[0].sup_deviation == pytest.approx(direct, abs=1e-12)

    def test_low_budget_points_flagged(self):
        gen = toy_generator()
        family = axis_threshold_family(2, 2)
        rep = rate_experiment_classification(
            gen, family, [(40, 0.1)], trials=2, seed=7
        )
        assert all(r.flagged for r in rep.records)

    def test_naive_scaling_drifts_when_alpha_shrinks(self):
        # with alpha_n = n^(-0.6), sqrt(n)-normalized deviations blow up
        # while sqrt(n alpha)-normalized ones stay flat
        gen = toy_generator(noise=0.1)
        family = axis_threshold_family(2, 10)
        naive, proper = [], []
        for n in (1000, 8000, 64_000):
            alpha = n ** (-0.6)
            schedule = [(n, alpha)]
            rep = rate_experiment_classification(
                gen, family, schedule, trials=30, seed=8
            )
            med = rep.medians[(n, alpha)]
            naive.append(med * np.sqrt(n))
            proper.append(med * np.sqrt(n * alpha))
        assert naive[0] < naive[1] < naive[2]
        assert max(proper) / min(proper) < 2.5


class TestDecomposition:
    def test_holds_on_seeded_trials(self):
        gen = toy_generator(noise=0.1)
        family = ClassifierFamily(
            members=(AxisClassifier(0, 0.5), AxisClassifier(1, 0.7)), vc_dim=2
        )
        region = QuantileRegion(alpha=0.1, norm="linf")
        for t in range(10):
            data = gen.sample(1000, substream(9, "dec", t))
            check = risk_decomposition_check(data, family, region, gen)
            assert check.holds

    def test_requires_analytic_oracle(self):
        gen = toy_generator()
        family = ClassifierFamily(members=(AxisClassifier(0, 0.5),), vc_dim=2)
        region = QuantileRegion(alpha=0.1, norm="l2")
        data = gen.sample(100, substream(10, "no-oracle"))
        with pytest.raises(ConfigurationError):
            risk_decomposition_check(data, family, region, gen)


class TestRegretAndRegionQ:
    def test_erm_regret_below_twice_sup_deviation(self):
        gen = toy_generator(noise=0.15)
        family = axis_threshold_family(2, 10)
        region = QuantileRegion(alpha=0.2, norm="linf")
        truths = np.array(
            [true_conditional_risk(gen, g, region).value for g in family.members]
        )
        for t in range(10):
            data = gen.sample(1000, substream(11, "regret", t))
            emps = np.array(
                [empirical_conditional_risk(data, g, region) for g in family.members]
            )
            chosen = erm(data, family, region)
            regret = truths[chosen] - truths.min()
            sup_dev = np.abs(emps - truths).max()
            assert regret <= 2 * sup_dev + 1e-12

    def test_fixed_region_scaling_band(self):
        # sqrt(q n)-normalized sup deviation stays within a factor-2 band
        gen = toy_generator(noise=0.1)
        family = axis_threshold_family(2, 10)
        t0 = 0.9
        q = 1.0 - t0**2
        region = ExplicitRegion(norm="linf", threshold=t0, q=q)
        truths = np.array(
            [true_conditional_risk(gen, g, region).value for g in family.members]
        )
        meds = []
        for n in (1000, 10_000, 100_000):
            vals = []
            for t in range(40):
                data = gen.sample(n, substream(12, "regionq", n, t))
                emps = np.array(
                    [
                        empirical_conditional_risk(data, g, region)
                        for g in family.members
                    ]
                )
                vals.append(np.abs(emps - truths).max())
            meds.append(np.median(vals) * np.sqrt(q * n))
        assert max(meds) / min(meds) < 2.0
