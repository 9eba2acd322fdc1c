import json
import random

import pytest

from reflcalc.formula import OMEGA, parse
from reflcalc.checker import truth_mask
from reflcalc.kripke import (FrameKind, Model, closure, expand, frame_violations, from_json,
                             generated_submodel, is_frame, is_persistent, persist_valuation, to_dot,
                             to_json)

RJ, RC = FrameKind.RJ, FrameKind.RC


def ex_base():
    return Model.from_edges({0, 1, 2}, {OMEGA: [(0, 1), (0, 2)]}, {"p": [0, 1], "q": [0, 2]}, root=0)


def ex_closed(n=0):
    return closure(ex_base(), {n, OMEGA}, RC)


def random_model(rng, n_nodes, labels, density=0.2):
    edges = {a: [(x, y) for x in range(n_nodes) for y in range(n_nodes) if rng.random() < density]
             for a in labels}
    val = {"p": [x for x in range(n_nodes) if rng.random() < 0.5]}
    return Model.from_edges(range(n_nodes), edges, val)


class TestModel:
    def test_validation(self):
        with pytest.raises(ValueError):
            Model.from_edges({0}, {0: [(0, 1)]})
        with pytest.raises(ValueError):
            Model.from_edges({0}, {}, {"p": [3]})
        with pytest.raises(ValueError):
            Model(frozenset({0}), {}, {}, root=2)

    def test_empty_relations_dropped(self):
        m = Model.from_edges({0, 1}, {0: [], 1: [(0, 1)]})
        assert m.labels == [1]
        assert m == Model.from_edges({0, 1}, {1: [(0, 1)]})

    def test_json_round_trip(self):
        m = ex_closed(3)
        data = to_json(m)
        assert set(data) == {"nodes", "root", "edges", "val"}
        assert {"from": 0, "to": 1, "mod": "w"} in data["edges"]
        assert from_json(json.dumps(data)) == m

    def test_dot(self):
        dot = to_dot(ex_base())
        assert dot.startswith("digraph")
        assert 'n0 -> n1 [label="w"]' in dot
        assert 'label="1, p"' in dot


class TestFrames:
    def test_example_closure_is_rc_frame(self):
        assert is_frame(ex_closed(), {0, OMEGA}, RC)

    def test_monotonicity_failure(self):
        m = Model.from_edges({0, 1}, {1: [(0, 1)]})
        assert not is_frame(m, {0, 1}, RC)
        assert is_frame(m, {0, 1}, RJ)

    def test_empty_model(self):
        assert is_frame(Model(frozenset({0, 1, 2})), {0, 1, OMEGA}, RJ)

    def test_labels_outside_signature_rejected(self):
        with pytest.raises(ValueError):
            frame_violations(Model.from_edges({0, 1}, {2: [(0, 1)]}), {0}, RJ)

    def test_persistence(self):
        assert is_persistent(ex_base())
        assert is_persistent(Model.from_edges({0}, {}, {"p": [0]}))
        assert not is_persistent(Model.from_edges({0, 1}, {OMEGA: [(0, 1)]}, {"p": [1]}))


class TestClosure:
    def test_example(self):
        for n in (0, 4):
            m = ex_closed(n)
            assert m.edges(OMEGA) == {(0, 1), (0, 2)}
            assert m.edges(n) == {(0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2)}
            assert m.val == ex_base().val

    def test_fixpoint(self):
        m = ex_closed()
        assert closure(m, {0, OMEGA}, RC) == m

    def test_monotone_and_j(self):
        m = Model.from_edges({0, 1, 2}, {1: [(0, 1), (0, 2)]})
        c = closure(m, {0, 1}, RC)
        assert c.edges(1) == {(0, 1), (0, 2)}
        assert c.edges(0) == {(0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2)}

    def test_rj_polytransitive(self):
        m = Model.from_edges({0, 1, 2}, {OMEGA: [(0, 1)], 0: [(1, 2)]})
        c = closure(m, {0, OMEGA}, RJ)
        assert c.edges(0) == {(1, 2), (0, 2)}
        assert c.edges(OMEGA) == {(0, 1)}

    @pytest.mark.parametrize("kind", [RJ, RC])
    def test_random_properties(self, kind):
        rng = random.Random(11)
        S = [0, 1, OMEGA]
        for _ in range(150):
            m = random_model(rng, rng.randint(1, 6), S, 0.12)
            c = closure(m, S, kind)
            assert is_frame(c, S, kind)
            assert all(m.edges(a) <= c.edges(a) for a in S)
            assert closure(c, S, kind) == c
            # minimality: dropping any added edge breaks a frame condition
            for a in S:
                for x, y in c.edges(a) - m.edges(a):
                    rows = dict(c.succ)
                    rows[a] = dict(rows[a])
                    rows[a][x] &= ~(1 << y)
                    assert not is_frame(c.replace(succ=rows), S, kind)

    def test_monotone_in_edges(self):
        rng = random.Random(5)
        S = [0, 1, OMEGA]
        for _ in range(100):
            small = random_model(rng, 5, S, 0.08)
            extra = random_model(rng, 5, S, 0.08)
            big = Model.from_edges(range(5), {a: small.edges(a) | extra.edges(a) for a in S})
            cs, cb = closure(small, S, RC), closure(big, S, RC)
            assert all(cs.edges(a) <= cb.edges(a) for a in S)


class TestExpand:
    def test_empty_when_label_is_on_top(self):
        m = closure(Model.from_edges({0, 1}, {0: [(0, 1)]}), {0}, RC)
        assert expand(m, {0}, OMEGA).edges(OMEGA) == set()

    def test_single_omega_edge(self):
        # condition J forces the loop at b: a R_w b and a R_0 b give b R_0 b
        m = Model.from_edges({0, 1}, {OMEGA: [(0, 1)]})
        e = expand(m, {OMEGA}, 0)
        assert e.edges(0) == {(0, 1), (1, 1)}
        assert is_frame(e, {0, OMEGA}, RC)

    def test_example_label_five(self):
        e = expand(ex_base(), {OMEGA}, 5)
        assert e.edges(5) == {(0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2)}
        assert e.edges(OMEGA) == ex_base().edges(OMEGA) and e.val == ex_base().val
        assert e == closure(ex_base(), {5, OMEGA}, RC)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            expand(ex_base(), {OMEGA}, OMEGA)
        with pytest.raises(ValueError):
            expand(Model.from_edges({0, 1}, {1: [(0, 1)]}), {0, 1}, 2)

    def test_random(self):
        rng = random.Random(3)
        for _ in range(150):
            S = sorted(rng.sample([0, 2, 4, OMEGA], rng.randint(1, 3)))
            m = persist_valuation(closure(random_model(rng, rng.randint(1, 5), S, 0.15), S, RC))
            new = rng.choice([a for a in (1, 3, 5) if a not in S])
            e = expand(m, S, new)
            assert is_frame(e, set(S) | {new}, RC)
            assert is_persistent(e)
            assert all(e.edges(a) == m.edges(a) for a in S)


class TestSubmodelAndPersistence:
    def test_generated_submodel(self):
        m = Model.from_edges({0, 1, 2, 3}, {0: [(0, 1), (1, 2)]}, {"p": [2, 3]}, root=0)
        g = generated_submodel(m, 1)
        assert g.nodes == {1, 2} and g.root == 1 and g.val == {"p": 0b100}
        assert generated_submodel(m, 0).nodes == {0, 1, 2}
        assert generated_submodel(ex_base(), 1).nodes == {1}
        with pytest.raises(ValueError):
            generated_submodel(m, 9)

    def test_submodel_preserves_truth(self):
        rng = random.Random(8)
        f = parse("<0>(p & <1>p) & <w>T")
        for _ in range(100):
            m = random_model(rng, 5, [0, 1, OMEGA])
            x = rng.randrange(5)
            g = generated_submodel(m, x)
            assert bool(truth_mask(m, f) >> x & 1) == bool(truth_mask(g, f) >> x & 1)

    def test_persist_valuation(self):
        m = Model.from_edges({0, 1}, {OMEGA: [(0, 1)]}, {"p": [1]})
        assert persist_valuation(m).val["p"] == 0b11
        plain = Model.from_edges({0, 1}, {0: [(0, 1)]}, {"p": [1]})
        assert persist_valuation(plain) == plain
        chain = closure(Model.from_edges({0, 1, 2}, {OMEGA: [(0, 1), (1, 2)]}, {"p": [2]}), {OMEGA}, RC)
        pv = persist_valuation(chain)
        assert pv.val["p"] == 0b111 and is_persistent(pv)
        assert persist_valuation(pv) == pv
