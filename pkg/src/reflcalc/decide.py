"""Polynomial-time decision procedures for RJ, RC and RCw.

A sequent A |- B is derivable iff B holds at the root of the canonical
model of A for the logic: RJ_S[A] with S the labels of A, or RC_S[A]
(with persistent valuation for RCw) with S the labels of A and B.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Union

from .checker import check, truth_masks
from .formula import OMEGA, Formula, Label, Sequent, parse_sequent, relabel, signature
from .kripke import FrameKind, Model, generated_submodel
from .tree import rc_model, rcw_model, rj_model

__all__ = ["Logic", "Verdict", "decide", "countermodel", "relabel_sequent", "relabel_check", "as_sequent",
           "entails_each", "decide_all"]


class Logic(enum.Enum):
    RJ = "rj"
    RC = "rc"
    RCW = "rcw"

    @classmethod
    def coerce(cls, value: Union["Logic", str]) -> "Logic":
        if isinstance(value, Logic):
            return value
        key = str(value).lower().replace("ω", "w").replace("omega", "w")
        for logic in cls:
            if logic.value == key or logic.name.lower() == key:
                return logic
        raise ValueError(f"unknown logic {value!r} (expected rj, rc or rcw)")

    @property
    def frame_kind(self) -> FrameKind:
        return FrameKind.RJ if self is Logic.RJ else FrameKind.RC

    @property
    def persistent(self) -> bool:
        return self is Logic.RCW

    def __str__(self):
        return {"rj": "RJ", "rc": "RC", "rcw": "RCw"}[self.value]


@dataclass(frozen=True, eq=False)
class Verdict:
    """Outcome of :func:`decide`; truthy iff the sequent is provable.

    For unprovable sequents `witness` is the canonical model, rooted, with
    the antecedent true and the consequent false at the root.
    """

    sequent: Sequent
    logic: Logic
    provable: bool
    witness: Optional[Model] = None
    signature: frozenset = frozenset()

    def __bool__(self):
        return self.provable

    def __str__(self):
        word = "provable" if self.provable else "not provable"
        return f"{self.sequent} : {word} in {self.logic}"


def as_sequent(s: Union[Sequent, str, tuple]) -> Sequent:
    if isinstance(s, Sequent):
        return s
    if isinstance(s, str):
        return parse_sequent(s)
    a, b = s
    return Sequent(a, b)


def canonical_model(sequent: Sequent, logic: Logic) -> tuple[Model, frozenset]:
    a, b = sequent
    if logic is Logic.RJ:
        S = signature(a)
        return rj_model(a, S), S
    S = signature(a, b)
    build = rcw_model if logic is Logic.RCW else rc_model
    return build(a, S), S


def _hopeless(a: Formula, b: Formula, logic: Logic) -> bool:
    # the consequent uses a label the antecedent cannot supply
    labels_a, labels_b = signature(a), signature(b)
    if logic is Logic.RJ:
        return not labels_b <= labels_a
    return bool(labels_b) and (not labels_a or max(labels_b) > max(labels_a))


def decide(s: Union[Sequent, str], logic: Union[Logic, str] = Logic.RC) -> Verdict:
    """Decide derivability of a sequent in the given logic."""
    sequent = as_sequent(s)
    logic = Logic.coerce(logic)
    a, b = sequent
    model, S = canonical_model(sequent, logic)
    provable = not _hopeless(a, b, logic) and check(model, model.root, b)
    return Verdict(sequent, logic, provable, None if provable else model, S)


def countermodel(s: Union[Sequent, str], logic: Union[Logic, str] = Logic.RC) -> Model:
    """Rooted model refuting an unprovable sequent; ValueError if provable."""
    verdict = decide(s, logic)
    if verdict.provable:
        raise ValueError(f"{verdict.sequent} is provable in {verdict.logic}; no countermodel")
    return generated_submodel(verdict.witness, verdict.witness.root)


LabelMap = Union[Mapping[Label, Label], Callable[[Label], Label]]


def _validated_map(sequent: Sequent, mapping: LabelMap) -> Callable[[Label], Label]:
    fn = mapping.__getitem__ if isinstance(mapping, Mapping) else mapping
    labels = sorted(signature(*sequent))
    try:
        images = [fn(a) for a in labels]
    except KeyError as exc:
        raise ValueError(f"label map is undefined on {exc.args[0]}") from None
    for a, fa in zip(labels, images):
        if (a is OMEGA) != (fa is OMEGA):
            raise ValueError("label map must fix w exactly on w")
    if any(x >= y for x, y in zip(images, images[1:])):
        raise ValueError("label map is not strictly increasing on the sequent's labels")
    return fn


def relabel_sequent(s: Union[Sequent, str], mapping: LabelMap) -> Sequent:
    sequent = as_sequent(s)
    fn = _validated_map(sequent, mapping)
    return Sequent(relabel(sequent.antecedent, fn), relabel(sequent.consequent, fn))


def relabel_check(s: Union[Sequent, str], logic: Union[Logic, str], mapping: LabelMap) -> bool:
    """Whether decide agrees on a sequent and its order-preserving relabelling."""
    sequent = as_sequent(s)
    image = relabel_sequent(sequent, mapping)
    return decide(sequent, logic).provable == decide(image, logic).provable


def entails_each(antecedent: Formula, consequents: Iterable[Formula],
                 logic: Union[Logic, str] = Logic.RC) -> list[bool]:
    """decide(antecedent |- B).provable for each B, building each canonical
    model once per signature instead of once per consequent."""
    logic = Logic.coerce(logic)
    models: dict = {}
    out = []
    for b in consequents:
        if _hopeless(antecedent, b, logic):
            out.append(False)
            continue
        key = signature(antecedent) if logic is Logic.RJ else signature(antecedent, b)
        if key not in models:
            models[key] = canonical_model(Sequent(antecedent, b), logic)[0]
        model = models[key]
        out.append(bool(truth_masks(model, b)[b] >> model.root & 1))
    return out


def decide_all(sequents: Iterable[Union[Sequent, str]], logic: Union[Logic, str]) -> list[Verdict]:
    return [decide(s, logic) for s in sequents]
