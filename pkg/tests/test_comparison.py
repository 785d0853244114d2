import numpy as np
import pytest

from conftest import build
from mixedtrails.comparison import bayes_factor, grid_average, kass_raftery_label, rank_hypotheses
from mixedtrails.elicitation import DEFAULT_KAPPAS
from mixedtrails.evidence import EvidenceCurve, EvidencePoint, evidence_curve
from oracles import random_instance


def _curve(name, log_ml, kappa=1.0, se=None):
    return EvidenceCurve(name, [EvidencePoint(kappa, log_ml, se, None if se is None else 50, "x")])


class TestLabels:
    @pytest.mark.parametrize("x,label", [
        (0.0, "barely-worth-mentioning"), (2.0, "barely-worth-mentioning"), (2.01, "positive"),
        (6.0, "positive"), (-7.0, "strong"), (10.0, "strong"), (10.0001, "decisive"), (-50, "decisive"),
    ])
    def test_thresholds(self, x, label):
        assert kass_raftery_label(x) == label

    def test_monotone(self):
        order = ["barely-worth-mentioning", "positive", "strong", "decisive"]
        ranks = [order.index(kass_raftery_label(x)) for x in np.linspace(0, 30, 301)]
        assert ranks == sorted(ranks)


class TestBayesFactor:
    def test_identical(self):
        c = _curve("a", -12.5)
        r = bayes_factor(c, c, 1.0)
        assert r.log_bayes_factor == 0.0 and r.label == "barely-worth-mentioning"
        assert not r.decisive_by_paper_rule and r.std_err is None

    def test_boundary_is_strong(self):
        r = bayes_factor(_curve("a", -100.0), _curve("b", -95.0), 1.0)
        assert r.log_bayes_factor == -5.0 and r.two_ln_bf == -10.0
        assert r.label == "strong" and not r.decisive_by_paper_rule

    def test_antisymmetry(self, rng):
        for _ in range(50):
            a, b = rng.normal(-100, 30, size=2)
            ab = bayes_factor(_curve("a", a), _curve("b", b), 1.0)
            ba = bayes_factor(_curve("b", b), _curve("a", a), 1.0)
            assert ab.log_bayes_factor == -ba.log_bayes_factor
            assert ab.label == ba.label

    def test_combined_se(self):
        r = bayes_factor(_curve("a", -1.0, se=0.3), _curve("b", -2.0, se=0.4), 1.0)
        assert r.std_err == pytest.approx(0.5)
        r = bayes_factor(_curve("a", -1.0, se=0.3), _curve("b", -2.0), 1.0)
        assert r.std_err == pytest.approx(0.3)

    def test_missing_kappa(self):
        with pytest.raises(KeyError):
            bayes_factor(_curve("a", -1.0), _curve("b", -2.0, kappa=2.0), 1.0)

    def test_soccer_split_decisive(self, soccer):
        d, hyps = soccer
        het = evidence_curve(d, hyps["half_offense_defense"], DEFAULT_KAPPAS)
        hom = evidence_curve(d, hyps["hom_uniform"], DEFAULT_KAPPAS)
        for k in (100.0, 1000.0, 10000.0):
            r = bayes_factor(het, hom, k)
            assert r.decisive_by_paper_rule and r.log_bayes_factor > 0 and r.label == "decisive"


class TestRanking:
    def test_single(self):
        (e,) = rank_hypotheses([_curve("a", -3.0)], 1.0)
        assert e.rank == 1 and e.gap_to_next is None
        assert not e.decisive_over_next and not e.incomparable_with_next

    def test_empty(self):
        with pytest.raises(ValueError):
            rank_hypotheses([], 1.0)

    def test_order_and_flags(self):
        curves = [_curve("c", -130.0), _curve("a", -100.0), _curve("b", -105.0)]
        r = rank_hypotheses(curves, 1.0)
        assert [e.name for e in r] == ["a", "b", "c"]
        assert [e.decisive_over_next for e in r] == [False, True, False]

    def test_shift_invariance(self, rng):
        for _ in range(30):
            vals = rng.normal(-200, 40, size=5)
            shift = rng.normal(0, 1000)
            base = rank_hypotheses([_curve(f"h{i}", v) for i, v in enumerate(vals)], 1.0)
            moved = rank_hypotheses([_curve(f"h{i}", v + shift) for i, v in enumerate(vals)], 1.0)
            assert [e.name for e in base] == [e.name for e in moved]
            assert [e.decisive_over_next for e in base] == [e.decisive_over_next for e in moved]

    def test_transitive_when_decisive(self, rng):
        vals = np.cumsum(rng.uniform(11, 40, size=6)) * -1
        r = rank_hypotheses([_curve(f"h{i}", v) for i, v in enumerate(rng.permutation(vals))], 1.0)
        assert all(e.decisive_over_next for e in r[:-1])
        assert all(r[i].log_ml - r[j].log_ml > 10 for i in range(6) for j in range(i + 1, 6))

    def test_same_hypothesis_different_seeds_incomparable(self, rng):
        pairs, n, gamma, phis = random_instance(rng, m_max=40, o_max=2)
        while gamma.shape[1] < 2 or np.all(gamma.max(axis=1) == 1.0):
            pairs, n, gamma, phis = random_instance(rng, m_max=40, o_max=2)
        d, h = build(pairs, n, gamma, phis, "a")
        _, h2 = build(pairs, n, gamma, phis, "b")
        a = evidence_curve(d, h, [10.0], n_samples=50, seed=1)
        b = evidence_curve(d, h2, [10.0], n_samples=50, seed=2)
        assert a.at(10.0).log_ml != b.at(10.0).log_ml
        top, _ = rank_hypotheses([a, b], 10.0)
        assert top.incomparable_with_next and not top.decisive_over_next


def test_grid_average():
    c = EvidenceCurve("a", [EvidencePoint(0.0, np.log(0.2)), EvidencePoint(1.0, np.log(0.4))])
    assert grid_average(c) == pytest.approx(np.log(0.3), rel=1e-14)
    assert grid_average(c, [1.0]) == pytest.approx(np.log(0.4), rel=1e-14)


def test_soccer_split_hypotheses_rank_in_decisive_tiers(soccer):
    d, hyps = soccer
    tiers = [["half_offense_defense"], ["hom_data", "half_data_data"],
             ["hom_uniform", "half_uniform_uniform"], ["half_left_right_flank"]]
    curves = {n: evidence_curve(d, hyps[n], DEFAULT_KAPPAS) for tier in tiers for n in tier}
    for k in (100.0, 1000.0, 10000.0):
        ranked = [e.name for e in rank_hypotheses(list(curves.values()), k)]
        flat = [n for tier in tiers for n in tier]
        pos = {n: ranked.index(curves[n].name) for n in flat}
        for upper, lower in zip(tiers, tiers[1:]):
            worst_upper = min(curves[n].at(k).log_ml for n in upper)
            best_lower = max(curves[n].at(k).log_ml for n in lower)
            assert worst_upper - best_lower > 10
            assert max(pos[n] for n in upper) < min(pos[n] for n in lower)
