import random

import pytest

from reflcalc.formula import OMEGA, Sequent, Var, parse, signature
from reflcalc.checker import check
from reflcalc.decide import Logic, countermodel, decide, entails_each, relabel_check, relabel_sequent
from reflcalc.kripke import is_frame, is_persistent
from reflcalc.oracle import refute_by_models

from corpus import random_formula

RJ, RC, RCW = Logic.RJ, Logic.RC, Logic.RCW


def verify_witness(s, logic):
    v = decide(s, logic)
    assert not v.provable
    m = v.witness
    a, b = v.sequent
    assert check(m, m.root, a) and not check(m, m.root, b)
    assert is_frame(m, v.signature, logic.frame_kind)
    if logic is RCW:
        assert is_persistent(m)


class TestLogic:
    @pytest.mark.parametrize("text, expected", [("rj", RJ), ("RC", RC), ("rcw", RCW), ("RCω", RCW),
                                                ("rcomega", RCW), (RC, RC)])
    def test_coerce(self, text, expected):
        assert Logic.coerce(text) is expected

    def test_bad_logic(self):
        with pytest.raises(ValueError):
            Logic.coerce("k4")


class TestExamples:
    def test_distribution_provable(self):
        assert decide("<w>(p & q) |- <w>p & <w>q", RJ)

    def test_example_ex(self):
        v = decide("<w>p & <w>q |- <w>(p & q)", RCW)
        assert not v
        assert len(countermodel(v.sequent, RCW).nodes) == 3
        verify_witness(v.sequent, RCW)

    def test_axiom5(self):
        assert decide("<1>p & <0>q |- <1>(p & <0>q)", RJ)

    def test_persistence(self):
        assert decide("<w>p |- p", RCW)
        assert not decide("<w>p |- p", RC)

    def test_monotonicity(self):
        assert not decide("<0>p |- <1>p", RC)
        assert decide("<1>p |- <0>p", RC)
        assert not decide("<1>p |- <0>p", RJ)

    def test_label_short_circuits(self):
        v = decide("<1>p |- <0>T", RJ)
        assert not v and v.witness is not None
        assert not decide("<0>p |- <w>T", RC)
        assert not decide("p |- <0>T", RCW)
        assert decide("p & q |- q", RC)


class TestCountermodel:
    def test_example_ex_shape(self):
        m = countermodel("<w>p & <w>q |- <w>(p & q)", RCW)
        assert m.edges(OMEGA) == {(0, 1), (0, 2)}
        assert m.true_vars(0) == ["p", "q"]

    def test_two_node_chain(self):
        m = countermodel("<w>p |- p", RC)
        assert m.nodes == {0, 1} and m.edges(OMEGA) == {(0, 1)} and m.true_vars(1) == ["p"]
        assert m.true_vars(0) == []

    def test_one_node(self):
        for logic in Logic:
            m = countermodel("p |- q", logic)
            assert m.nodes == {0} and m.true_vars(0) == ["p"]

    def test_provable_rejected(self):
        with pytest.raises(ValueError):
            countermodel("p & q |- p", RJ)

    def test_random_witnesses(self):
        rng = random.Random(12)
        for _ in range(300):
            s = Sequent(random_formula(rng, rng.randint(1, 10)), random_formula(rng, rng.randint(1, 8)))
            for logic in Logic:
                if not decide(s, logic):
                    verify_witness(s, logic)
                    m = countermodel(s, logic)
                    assert check(m, m.root, s.antecedent) and not check(m, m.root, s.consequent)


class TestRelabel:
    def test_examples(self):
        s = parse("<5>p & <0>q |- <5>(p & <0>q) & <w>T")
        assert relabel_check(s, RC, {0: 1, 5: 7, OMEGA: OMEGA})
        assert relabel_check(s, RJ, lambda a: a)
        ax5 = parse("<2>p & <1>q |- <2>(p & <1>q)")
        assert relabel_check(ax5, RJ, lambda a: a if a is OMEGA else 2 * a)
        assert relabel_sequent(ax5, lambda a: 2 * a) == parse("<4>p & <2>q |- <4>(p & <2>q)")

    def test_bad_maps(self):
        s = parse("<1>p |- <0>p")
        with pytest.raises(ValueError):
            relabel_check(s, RC, {0: 3, 1: 2})
        with pytest.raises(ValueError):
            relabel_check(s, RC, {0: 0, 1: OMEGA})
        with pytest.raises(ValueError):
            relabel_check(parse("<w>p |- p"), RC, {OMEGA: 4})
        with pytest.raises(ValueError):
            relabel_check(s, RC, {0: 1})


def test_entails_each_matches_decide():
    rng = random.Random(21)
    for _ in range(100):
        a = random_formula(rng, rng.randint(1, 9))
        bs = [random_formula(rng, rng.randint(1, 6)) for _ in range(8)]
        for logic in Logic:
            assert entails_each(a, bs, logic) == [decide(Sequent(a, b), logic).provable for b in bs]


def test_sound_for_small_models():
    # provable sequents hold in every enumerated small model of the logic
    rng = random.Random(31)
    for _ in range(150):
        s = Sequent(random_formula(rng, rng.randint(1, 5), labels=(0, OMEGA)),
                    random_formula(rng, rng.randint(1, 4), labels=(0, OMEGA)))
        for logic in Logic:
            if decide(s, logic):
                assert refute_by_models(s, logic, 3) is None


def test_large_sequent_is_fast():
    import time
    rng = random.Random(0)
    a = random_formula(rng, 1000, names=("p", "q", "r"))
    b = random_formula(rng, 1000, names=("p", "q", "r"))
    for logic in Logic:
        t = time.perf_counter()
        decide(Sequent(a, b), logic)
        assert time.perf_counter() - t < 5
