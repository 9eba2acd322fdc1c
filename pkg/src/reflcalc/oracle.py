"""Independent referees for the decision procedure.

* :func:`prove_bounded` searches for an explicit derivation from the axioms
  and rules, saturating a bounded universe of formulas.
* :func:`refute_by_models` enumerates small frames and valuations looking
  for a countermodel.
* :func:`canonical_model` and :func:`irreflexive_canonical_model` build the
  finite canonical models over an adequate set; :func:`truth_lemma_check`
  verifies that forcing there coincides with theory membership.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional, Union

from .checker import truth_masks
from .formula import (OMEGA, TOP, And, Dia, Formula, Label, Sequent, Top, Var, conj, label_str,
                      postorder, render, signature, variables)
from .kripke import (FrameKind, Model, closure, frame_violations, generated_submodel, is_persistent,
                     iter_bits, mask_of)
from .decide import Logic, as_sequent, decide, entails_each

__all__ = [
    "Derivation", "DerivationError", "AXIOM_GROUP", "validate",
    "prove_bounded", "refute_by_models", "small_frames",
    "enumerate_theories", "canonical_model", "irreflexive_canonical_model",
    "truth_lemma_check", "irmodel_violations", "TruthReport",
    "Outcome", "CrossCheck", "cross_check", "default_decider",
    "MAX_PHI",
]

# rule name -> axiom group (None for inference rules)
AXIOM_GROUP = {
    "refl": 1, "top": 1, "cut": None,
    "and_left": 2, "and_right": 2, "and_intro": None,
    "dia": None, "dia_trans": 3,
    "dia_outer": 4, "dia_inner": 4,
    "j": 5, "mono": 6, "persist": 7,
}
_RULE_GROUP = {"cut": 1, "and_intro": 2, "dia": 3}


class DerivationError(ValueError):
    pass


@dataclass(frozen=True)
class Derivation:
    rule: str
    sequent: Sequent
    premises: tuple["Derivation", ...] = ()

    @property
    def depth(self) -> int:
        return 1 + max((p.depth for p in self.premises), default=0)

    @property
    def group(self) -> int:
        return AXIOM_GROUP.get(self.rule) or _RULE_GROUP[self.rule]

    def nodes(self):
        stack = [self]
        while stack:
            d = stack.pop()
            yield d
            stack.extend(reversed(d.premises))

    def leaves(self) -> list["Derivation"]:
        return [d for d in self.nodes() if not d.premises]

    def to_text(self, indent: int = 0) -> str:
        lines = []
        stack = [(self, indent)]
        while stack:
            d, level = stack.pop()
            lines.append(f"{'  ' * level}{d.rule}: {d.sequent}")
            stack.extend((p, level + 1) for p in reversed(d.premises))
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {"rule": self.rule, "sequent": str(self.sequent),
                "children": [p.to_json() for p in self.premises]}

    def __str__(self):
        return self.to_text()


def _step_ok(d: Derivation, logic: Logic) -> bool:
    a, b = d.sequent
    ps = [p.sequent for p in d.premises]
    rule = d.rule
    if rule not in AXIOM_GROUP:
        return False
    if AXIOM_GROUP[rule] is not None and ps:
        return False
    if rule == "refl":
        return a == b
    if rule == "top":
        return b == TOP
    if rule == "cut":
        return len(ps) == 2 and ps[0].antecedent == a and ps[1].consequent == b \
            and ps[0].consequent == ps[1].antecedent
    if rule == "and_left":
        return isinstance(a, And) and a.left == b
    if rule == "and_right":
        return isinstance(a, And) and a.right == b
    if rule == "and_intro":
        return len(ps) == 2 and isinstance(b, And) and ps[0] == Sequent(a, b.left) \
            and ps[1] == Sequent(a, b.right)
    if rule == "dia":
        return len(ps) == 1 and isinstance(a, Dia) and isinstance(b, Dia) and a.label == b.label \
            and ps[0] == Sequent(a.body, b.body)
    if rule == "dia_trans":
        return isinstance(a, Dia) and isinstance(a.body, Dia) and a.label == a.body.label \
            and b == a.body
    if rule == "dia_outer":       # <a><b>A |- <b>A, a >= b
        return isinstance(a, Dia) and isinstance(a.body, Dia) and a.label >= a.body.label \
            and b == a.body
    if rule == "dia_inner":       # <b><a>A |- <b>A, a >= b
        return isinstance(a, Dia) and isinstance(a.body, Dia) and a.body.label >= a.label \
            and b == Dia(a.label, a.body.body)
    if rule == "j":               # <a>A & <b>B |- <a>(A & <b>B), a > b
        if not (isinstance(a, And) and isinstance(a.left, Dia) and isinstance(a.right, Dia)):
            return False
        x, y = a.left, a.right
        return x.label > y.label and b == Dia(x.label, And(x.body, y))
    if rule == "mono":
        return logic is not Logic.RJ and isinstance(a, Dia) and isinstance(b, Dia) \
            and a.label > b.label and a.body == b.body
    if rule == "persist":
        return logic is Logic.RCW and isinstance(a, Dia) and a.label is OMEGA and b == a.body
    return False


def validate(derivation: Derivation, logic: Union[Logic, str]) -> None:
    """Raise DerivationError at the first step that is not a rule instance."""
    logic = Logic.coerce(logic)
    for d in derivation.nodes():
        if not _step_ok(d, logic):
            raise DerivationError(f"invalid {d.rule} step for {d.sequent} in {logic}")


# --------------------------------------------------------------------------
# bounded proof search

def _axiom_instances(a: Formula, logic: Logic):
    """(rule, consequent) for every axiom instance with antecedent `a`."""
    yield "refl", a
    yield "top", TOP
    if isinstance(a, And):
        yield "and_left", a.left
        yield "and_right", a.right
        x, y = a.left, a.right
        if isinstance(x, Dia) and isinstance(y, Dia) and x.label > y.label:
            yield "j", Dia(x.label, And(x.body, y))
    elif isinstance(a, Dia):
        inner = a.body
        if isinstance(inner, Dia):
            if a.label == inner.label:
                yield "dia_trans", inner
            if a.label >= inner.label:
                yield "dia_outer", inner
            if inner.label >= a.label:
                yield "dia_inner", Dia(a.label, inner.body)
        if logic is Logic.RCW and a.label is OMEGA:
            yield "persist", inner


def _leaf_rule(a: Formula, b: Formula, logic: Logic) -> Optional[str]:
    for rule, g in _axiom_instances(a, logic):
        if g == b:
            return rule
    if isinstance(a, Dia) and isinstance(b, Dia) and _step_ok(Derivation("mono", Sequent(a, b)), logic):
        return "mono"
    return None


def _universe(sequent: Sequent, size_cap: int) -> list[Formula]:
    """Subformulas of the sequent, their relabellings within its signature,
    and the conjunction / diamond shapes produced by axiom 5 on them."""
    labels = sorted(signature(*sequent))
    U = {TOP}
    for f in sequent:
        U.update(postorder(f))
    for f in [f for f in U if isinstance(f, Dia)]:
        U.update(Dia(a, f.body) for a in labels)
    dias = [f for f in U if isinstance(f, Dia)]
    for x in dias:
        for y in dias:
            if x.label > y.label:
                inner = And(x.body, y)
                U.update(g for g in (And(x, y), inner, Dia(x.label, inner)) if g.size <= size_cap)
    return sorted((f for f in U if f.size <= size_cap), key=lambda f: (f.size, render(f)))


def prove_bounded(s: Union[Sequent, str], logic: Union[Logic, str] = Logic.RC, depth: int = 8,
                  size_cap: Optional[int] = None) -> Optional[Derivation]:
    """Search for a derivation of depth <= `depth` over formulas of size <= `size_cap`.

    Derivable sequents between formulas of a bounded universe are saturated
    in rounds: round 0 holds the axiom instances, round r adds cuts,
    conjunction introductions and diamond steps over round r-1.  A sequent
    first reached in round r has a derivation of depth r + 1.  Failure is
    not a refutation.
    """
    sequent = as_sequent(s)
    logic = Logic.coerce(logic)
    if depth < 1:
        raise ValueError("depth must be positive")
    a, b = sequent
    if size_cap is None:
        size_cap = 2 * max(a.size, b.size)
    if size_cap < 1:
        raise ValueError("size_cap must be positive")
    if max(a.size, b.size) > size_cap:
        return None
    U = _universe(sequent, size_cap)
    index = {f: i for i, f in enumerate(U)}
    n = len(U)

    rows = [0] * n
    for i, f in enumerate(U):
        for _, g in _axiom_instances(f, logic):
            if g in index:
                rows[i] |= 1 << index[g]
        if logic is not Logic.RJ and isinstance(f, Dia):
            for label in signature(f, *sequent):
                if label < f.label and Dia(label, f.body) in index:
                    rows[i] |= 1 << index[Dia(label, f.body)]
    conjs = [(index[f], index[f.left], index[f.right]) for f in U if isinstance(f, And)]
    by_label: dict = {}
    for f in U:
        if isinstance(f, Dia) and f.body in index:
            by_label.setdefault(f.label, []).append((index[f], index[f.body]))
    dia_pairs = [(x, xb, y, yb) for group in by_label.values()
                 for (x, xb) in group for (y, yb) in group if x != y]

    gi, gj = index[a], index[b]
    levels = [rows]
    while not levels[-1][gi] >> gj & 1 and len(levels) < depth:
        prev = levels[-1]
        new = list(prev)
        for i in range(n):
            acc = prev[i]
            for k in iter_bits(prev[i]):
                acc |= prev[k]
            for k, l, r in conjs:
                if acc >> l & 1 and acc >> r & 1 and prev[i] >> l & 1 and prev[i] >> r & 1:
                    acc |= 1 << k
            new[i] = acc
        for x, xb, y, yb in dia_pairs:
            if prev[xb] >> yb & 1:
                new[x] |= 1 << y
        if new == prev:
            return None
        levels.append(new)
    if not levels[-1][gi] >> gj & 1:
        return None

    memo: dict = {}

    def first_level(i, j):
        return next(r for r, rows_ in enumerate(levels) if rows_[i] >> j & 1)

    def build(i, j):
        if (i, j) in memo:
            return memo[i, j]
        f, g = U[i], U[j]
        r = first_level(i, j)
        seq = Sequent(f, g)
        if r == 0:
            d = Derivation(_leaf_rule(f, g, logic), seq)
        else:
            prev = levels[r - 1]
            d = None
            if isinstance(f, Dia) and isinstance(g, Dia) and f.label == g.label \
                    and f.body in index and g.body in index \
                    and prev[index[f.body]] >> index[g.body] & 1:
                d = Derivation("dia", seq, (build(index[f.body], index[g.body]),))
            elif isinstance(g, And) and prev[i] >> index[g.left] & 1 and prev[i] >> index[g.right] & 1:
                d = Derivation("and_intro", seq, (build(i, index[g.left]), build(i, index[g.right])))
            else:
                k = next(k for k in iter_bits(prev[i]) if prev[k] >> j & 1)
                d = Derivation("cut", seq, (build(i, k), build(k, j)))
        memo[i, j] = d
        return d

    # explicit stack so deep proofs do not recurse: pre-build in level order
    derivation = build(gi, gj)
    validate(derivation, logic)
    return derivation


# --------------------------------------------------------------------------
# refutation by small models

def _canonical_frame_key(n: int, succ: dict, labels: tuple) -> tuple:
    best = None
    for perm in itertools.permutations(range(n)):
        key = tuple(
            tuple(sorted((perm[x], perm[y]) for x, ys in succ.get(a, {}).items() for y in iter_bits(ys)))
            for a in labels)
        if best is None or key < best:
            best = key
    return best


@lru_cache(maxsize=256)
def small_frames(S: tuple, kind: FrameKind, n: int) -> tuple[Model, ...]:
    """Closed RJ_S / RC_S frames on n nodes, one per isomorphism class found.

    Generators: every edge set for n <= 2 (when that is at most 2^12
    candidates); otherwise labelled trees, plus arbitrary reflexive loops
    while n <= 3.
    """
    labels = tuple(S)
    nodes = frozenset(range(n))
    pairs = [(x, y) for x in range(n) for y in range(n)]
    generators = []
    if n <= 2 and len(pairs) * len(labels) <= 12:
        slots = [(a, x, y) for a in labels for (x, y) in pairs]
        for bits in range(1 << len(slots)):
            generators.append([slots[i] for i in iter_bits(bits)])
    else:
        loop_slots = [(a, x, x) for a in labels for x in range(n)] if n <= 3 else []
        parent_choices = [range(i) for i in range(1, n)]
        for parents in itertools.product(*parent_choices):
            for labs in itertools.product(labels, repeat=n - 1):
                tree = [(labs[i], parents[i], i + 1) for i in range(n - 1)]
                for bits in range(1 << len(loop_slots)):
                    generators.append(tree + [loop_slots[i] for i in iter_bits(bits)])
    seen = set()
    frames = []
    for gen in generators:
        edges: dict = {}
        for a, x, y in gen:
            edges.setdefault(a, []).append((x, y))
        closed = closure(Model.from_edges(nodes, edges), labels, kind)
        key = _canonical_frame_key(n, closed.succ, labels)
        if key not in seen:
            seen.add(key)
            frames.append(closed)
    return tuple(frames)


def _compile(formulas: Iterable[Formula]):
    order: list[Formula] = []
    seen = set()
    for f in formulas:
        for g in postorder(f):
            if g not in seen:
                seen.add(g)
                order.append(g)
    pos = {g: i for i, g in enumerate(order)}
    ops = []
    for g in order:
        if isinstance(g, Var):
            ops.append(("v", g.name))
        elif isinstance(g, Top):
            ops.append(("t",))
        elif isinstance(g, And):
            ops.append(("a", pos[g.left], pos[g.right]))
        else:
            ops.append(("d", g.label, pos[g.body]))
    return ops, pos


def _evaluate(ops, frame_rows: dict, full: int, val: dict) -> list[int]:
    out = []
    for op in ops:
        kind = op[0]
        if kind == "v":
            out.append(val.get(op[1], 0))
        elif kind == "t":
            out.append(full)
        elif kind == "a":
            out.append(out[op[1]] & out[op[2]])
        else:
            body = out[op[2]]
            m = 0
            if body:
                for x, ys in frame_rows.get(op[1], ()):
                    if ys & body:
                        m |= 1 << x
            out.append(m)
    return out


def refute_by_models(s: Union[Sequent, str], logic: Union[Logic, str] = Logic.RC,
                     max_nodes: int = 4) -> Optional[Model]:
    """A small model of the logic refuting the sequent, or None.

    Frames range over :func:`small_frames` for the sequent's signature;
    valuations range over all assignments to its variables (persistent
    ones only for RCw).  The result is rooted at a refuting node.
    """
    sequent = as_sequent(s)
    logic = Logic.coerce(logic)
    if not 1 <= max_nodes <= 5:
        raise ValueError("max_nodes must be between 1 and 5")
    a, b = sequent
    S = tuple(sorted(signature(a, b)))
    names = variables(a, b)
    ops, pos = _compile([a, b])
    ia, ib = pos[a], pos[b]
    for n in range(1, max_nodes + 1):
        full = (1 << n) - 1
        for frame in small_frames(S, logic.frame_kind, n):
            rows = {lab: list(r.items()) for lab, r in frame.succ.items()}
            masks = range(1 << n)
            if logic.persistent:
                omega = frame.succ.get(OMEGA, {})
                masks = [m for m in masks
                         if all(not (ys & m) or m >> x & 1 for x, ys in omega.items())]
            for combo in itertools.product(masks, repeat=len(names)):
                val = dict(zip(names, combo))
                out = _evaluate(ops, rows, full, val)
                bad = out[ia] & ~out[ib]
                if bad:
                    model = frame.replace(val=val)
                    return generated_submodel(model, next(iter_bits(bad)))
    return None


# --------------------------------------------------------------------------
# canonical models over adequate sets

MAX_PHI = 48
MAX_THEORIES = 20000

Decider = Callable[[Sequent, Logic], bool]


def default_decider(sequent: Sequent, logic: Logic) -> bool:
    return decide(sequent, logic).provable


def _phi_list(phi: Iterable[Formula]) -> list[Formula]:
    phi = sorted(set(phi), key=lambda f: (f.size, render(f)))
    if len(phi) > MAX_PHI:
        raise ValueError(f"adequate set too large ({len(phi)} > {MAX_PHI} formulas)")
    return phi


def enumerate_theories(phi: Iterable[Formula], logic: Union[Logic, str],
                       decider: Optional[Decider] = None) -> tuple[list[Formula], list[int]]:
    """All L-theories in phi, as bitmasks over the returned formula order.

    Enumerated in lectic order with Ganter's next-closure algorithm; the
    closure of a set is every member of phi derivable from its conjunction
    (TOP for the empty set).  Without a decider, membership is settled by
    :func:`reflcalc.decide.entails_each`, which agrees with `decide`.
    """
    logic = Logic.coerce(logic)
    phi = _phi_list(phi)
    n = len(phi)
    memo: dict[int, int] = {}
    derivable: dict = {}

    def close(mask: int) -> int:
        if mask in memo:
            return memo[mask]
        premise = conj(phi[i] for i in iter_bits(mask))
        out = mask
        if decider is None:
            rest = [j for j in range(n) if not mask >> j & 1]
            for j, ok in zip(rest, entails_each(premise, [phi[j] for j in rest], logic)):
                if ok:
                    out |= 1 << j
            memo[mask] = out
            return out
        for j in range(n):
            if not mask >> j & 1:
                key = (premise, phi[j])
                if key not in derivable:
                    derivable[key] = decider(Sequent(premise, phi[j]), logic)
                if derivable[key]:
                    out |= 1 << j
        memo[mask] = out
        return out

    theories = []
    current = close(0)
    while current is not None:
        theories.append(current)
        if len(theories) > MAX_THEORIES:
            raise ValueError("too many theories; adequate set too large")
        nxt = None
        for i in range(n - 1, -1, -1):
            if current >> i & 1:
                continue
            low = (1 << i) - 1
            candidate = close((current & low) | (1 << i))
            if candidate & low == current & low:
                nxt = candidate
                break
        current = nxt
    return phi, theories


def _canonical(phi: list[Formula], theories: list[int], irreflexive: bool) -> Model:
    index = {f: i for i, f in enumerate(phi)}
    labels = sorted({f.label for f in phi if isinstance(f, Dia)})
    bit = {f: 1 << i for f, i in index.items()}
    succ: dict = {}
    for a in labels:
        # x R_a y iff need(y) within x and low(x) within y (and, irreflexively, some <a>A in x - y)
        dia_a = sum(bit[f] for f in phi if isinstance(f, Dia) and f.label == a)
        low_a = sum(bit[f] for f in phi if isinstance(f, Dia) and f.label < a)
        need_from: list[int] = []
        for f in phi:
            m = 0
            promoted = Dia(a, f)
            if promoted in bit:                                   # R1
                m |= bit[promoted]
            if isinstance(f, Dia) and Dia(a, f.body) in bit:      # R2
                m |= bit.get(Dia(min(a, f.label), f.body), 0)
            need_from.append(m)
        needs = []
        for y in theories:
            need = 0
            for i in iter_bits(y):
                need |= need_from[i]
            needs.append(need)
        rows = {}
        for x_id, x in enumerate(theories):
            out = 0
            low_x = x & low_a
            for y_id, y in enumerate(theories):
                if low_x & ~y or needs[y_id] & ~x:
                    continue
                if irreflexive and not (x & dia_a & ~y):
                    continue
                out |= 1 << y_id
            if out:
                rows[x_id] = out
        succ[a] = rows
    val = {}
    for f, i in index.items():
        if isinstance(f, Var):
            val[f.name] = mask_of(t for t, x in enumerate(theories) if x >> i & 1)
    return Model(frozenset(range(len(theories))), succ, val, None)


def canonical_model(phi: Iterable[Formula], logic: Union[Logic, str] = Logic.RCW,
                    decider: Optional[Decider] = None) -> Model:
    """Canonical model over phi: nodes are the L-theories in enumeration order."""
    phi_list, theories = enumerate_theories(phi, logic, decider)
    return _canonical(phi_list, theories, irreflexive=False)


def irreflexive_canonical_model(phi: Iterable[Formula], decider: Optional[Decider] = None,
                                logic: Union[Logic, str] = Logic.RCW) -> Model:
    """Canonical model keeping x R_a y only if some <a>A in x is missing from y."""
    phi_list, theories = enumerate_theories(phi, logic, decider)
    return _canonical(phi_list, theories, irreflexive=True)


@dataclass
class TruthReport:
    logic: Logic
    variant: str
    phi: list[Formula]
    theories: list[int]
    model: Model
    violations: list[tuple[int, Formula, bool]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def theory(self, node: int) -> list[Formula]:
        return [self.phi[i] for i in iter_bits(self.theories[node])]


def truth_lemma_check(phi: Iterable[Formula], logic: Union[Logic, str] = Logic.RCW,
                      decider: Optional[Decider] = None, variant: str = "plain") -> TruthReport:
    """Compare forcing in the canonical model with membership, theory by theory.

    Each violation is (node, formula, membership) where forcing disagreed.
    """
    logic = Logic.coerce(logic)
    if variant not in ("plain", "irreflexive"):
        raise ValueError("variant must be 'plain' or 'irreflexive'")
    phi_list, theories = enumerate_theories(phi, logic, decider)
    model = _canonical(phi_list, theories, irreflexive=(variant == "irreflexive"))
    report = TruthReport(logic, variant, phi_list, theories, model)
    for i, f in enumerate(phi_list):
        forced = truth_masks(model, f)[f]
        for node, x in enumerate(theories):
            member = bool(x >> i & 1)
            if member != bool(forced >> node & 1):
                report.violations.append((node, f, member))
    return report


def irmodel_violations(model: Model, phi: Iterable[Formula]) -> list[str]:
    """Irreflexive RJ-frame, empty relations off the signature, Phi-monotone, persistent."""
    phi = list(phi)
    S = sorted({f.label for f in phi if isinstance(f, Dia)})
    problems = []
    for a, rows in model.succ.items():
        if a not in S:
            problems.append(f"relation for label {label_str(a)} outside the signature")
        for x, ys in rows.items():
            if ys >> x & 1:
                problems.append(f"reflexive R_{label_str(a)} at node {x}")
    if all(a in S for a in model.succ):
        problems.extend(frame_violations(model, S, FrameKind.RJ))
    if not is_persistent(model):
        problems.append("valuation is not persistent")
    for f in phi:
        if not isinstance(f, Dia):
            continue
        lower = truth_masks(model, f)[f]
        for bigger in S:
            if f.label < bigger:
                g = Dia(bigger, f.body)
                upper = truth_masks(model, g)[g]
                if upper & ~lower:
                    problems.append(f"not Phi-monotone: {render(g)} without {render(f)}")
    return problems


# --------------------------------------------------------------------------
# referee

class Outcome(enum.Enum):
    PROVABLE = "provable"
    NOT_PROVABLE = "not provable"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CrossCheck:
    outcome: Outcome
    derivation: Optional[Derivation] = None
    model: Optional[Model] = None

    def to_json(self) -> dict:
        from .kripke import to_json
        return {"outcome": self.outcome.value,
                "derivation": self.derivation.to_json() if self.derivation else None,
                "model": to_json(self.model) if self.model else None}


def cross_check(s: Union[Sequent, str], logic: Union[Logic, str] = Logic.RC, depth: int = 8,
                size_cap: Optional[int] = None, max_nodes: int = 4) -> CrossCheck:
    """Proof search, then model search; inconclusive when both give up."""
    sequent = as_sequent(s)
    logic = Logic.coerce(logic)
    proof = prove_bounded(sequent, logic, depth, size_cap)
    if proof is not None:
        return CrossCheck(Outcome.PROVABLE, derivation=proof)
    model = refute_by_models(sequent, logic, max_nodes)
    if model is not None:
        return CrossCheck(Outcome.NOT_PROVABLE, model=model)
    return CrossCheck(Outcome.INCONCLUSIVE)
