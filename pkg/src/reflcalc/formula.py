"""Strictly positive formulas: AST, concrete syntax, and normal forms.

Formulas are hash-consed: structurally equal formulas are the same object,
so equality and hashing are O(1) and shared subterms are free.  Every
traversal here is iterative, which keeps very deep diamond chains usable.
"""

from __future__ import annotations

import re
import threading
import weakref
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Union

__all__ = [
    "OMEGA", "Label", "MAX_LABEL",
    "Formula", "Var", "Top", "And", "Dia", "TOP", "Sequent",
    "ParseError", "LabelOverflowError",
    "parse", "parse_formula", "parse_sequent", "render",
    "conj", "conjuncts", "fold", "postorder", "size", "signature",
    "variables", "substitute", "relabel", "subformulas",
    "adequate_closure", "is_adequate", "order", "is_ordered", "is_fact",
]

MAX_LABEL = 2**64 - 1


class _Omega:
    """The top modality label, greater than every natural number."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __reduce__(self):
        return (_Omega, ())

    def __repr__(self):
        return "OMEGA"

    def __str__(self):
        return "w"

    def __hash__(self):
        return hash("omega-label")

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        if other is self or _is_nat(other):
            return False
        return NotImplemented

    def __le__(self, other):
        if other is self:
            return True
        if _is_nat(other):
            return False
        return NotImplemented

    def __gt__(self, other):
        if other is self:
            return False
        if _is_nat(other):
            return True
        return NotImplemented

    def __ge__(self, other):
        if other is self or _is_nat(other):
            return True
        return NotImplemented


OMEGA = _Omega()
Label = Union[int, _Omega]


def _is_nat(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool) and x >= 0


def check_label(label) -> Label:
    if label is OMEGA:
        return label
    if not _is_nat(label):
        raise TypeError(f"modality label must be a natural number or OMEGA, got {label!r}")
    if label > MAX_LABEL:
        raise OverflowError(f"modality label {label} exceeds 64 bits")
    return label


def label_str(label: Label) -> str:
    return "w" if label is OMEGA else str(label)


# --------------------------------------------------------------------------
# AST

_IDENT = re.compile(r"[a-z][a-z0-9_]*\Z")
_table: "weakref.WeakValueDictionary[tuple, Formula]" = weakref.WeakValueDictionary()
_lock = threading.Lock()


class Formula:
    """Base class of the four formula constructors."""

    __slots__ = ("_hash", "size", "__weakref__")

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __delattr__(self, name):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __hash__(self):
        return self._hash

    # identity equality is structural equality thanks to interning
    def __eq__(self, other):
        return self is other

    def __ne__(self, other):
        return self is not other

    def __and__(self, other: "Formula") -> "And":
        return And(self, other)

    def __str__(self):
        return render(self)

    def __repr__(self):
        return f"parse({render(self)!r})"


def _intern(cls, key: tuple, size: int, **fields) -> Formula:
    node = _table.get(key)
    if node is not None:
        return node
    with _lock:
        node = _table.get(key)
        if node is None:
            node = object.__new__(cls)
            object.__setattr__(node, "_hash", hash(key))
            object.__setattr__(node, "size", size)
            for name, value in fields.items():
                object.__setattr__(node, name, value)
            _table[key] = node
    return node


class Var(Formula):
    __slots__ = ("name",)

    def __new__(cls, name: str) -> "Var":
        if not isinstance(name, str) or not _IDENT.match(name):
            raise ValueError(f"invalid variable name {name!r}")
        return _intern(cls, ("var", name), 1, name=name)

    def __reduce__(self):
        return (Var, (self.name,))


class Top(Formula):
    __slots__ = ()

    def __new__(cls) -> "Top":
        return _intern(cls, ("top",), 1)

    def __reduce__(self):
        return (Top, ())


class And(Formula):
    __slots__ = ("left", "right")

    def __new__(cls, left: Formula, right: Formula) -> "And":
        if not isinstance(left, Formula) or not isinstance(right, Formula):
            raise TypeError("And expects two formulas")
        return _intern(cls, ("and", left, right), 1 + left.size + right.size,
                       left=left, right=right)

    def __reduce__(self):
        return (And, (self.left, self.right))


class Dia(Formula):
    __slots__ = ("label", "body")

    def __new__(cls, label: Label, body: Formula) -> "Dia":
        label = check_label(label)
        if not isinstance(body, Formula):
            raise TypeError("Dia expects a formula body")
        return _intern(cls, ("dia", label, body), 1 + body.size, label=label, body=body)

    def __reduce__(self):
        return (Dia, (self.label, self.body))


TOP = Top()


@dataclass(frozen=True)
class Sequent:
    antecedent: Formula
    consequent: Formula

    def __iter__(self):
        yield self.antecedent
        yield self.consequent

    def __str__(self):
        return f"{render(self.antecedent)} |- {render(self.consequent)}"

    @property
    def size(self) -> int:
        return self.antecedent.size + self.consequent.size


# --------------------------------------------------------------------------
# traversal


def postorder(formula: Formula) -> Iterator[Formula]:
    """Yield each distinct subformula once, children before parents."""
    seen = set()
    stack = [(formula, False)]
    while stack:
        node, expanded = stack.pop()
        if node in seen:
            continue
        if expanded or isinstance(node, (Var, Top)):
            seen.add(node)
            yield node
            continue
        stack.append((node, True))
        if isinstance(node, And):
            stack.append((node.right, False))
            stack.append((node.left, False))
        else:
            stack.append((node.body, False))


def fold(formula: Formula, var: Callable, top: Callable, conj: Callable, dia: Callable):
    """Bottom-up evaluation, memoized over shared subformulas."""
    memo: dict = {}
    for node in postorder(formula):
        if isinstance(node, Var):
            memo[node] = var(node)
        elif isinstance(node, Top):
            memo[node] = top(node)
        elif isinstance(node, And):
            memo[node] = conj(node, memo[node.left], memo[node.right])
        else:
            memo[node] = dia(node, memo[node.body])
    return memo[formula]


def size(formula: Formula) -> int:
    return formula.size


def subformulas(formula: Formula) -> set[Formula]:
    return set(postorder(formula))


def signature(*formulas: Formula) -> frozenset:
    """Set of diamond labels occurring in the given formulas."""
    labels = set()
    for f in formulas:
        labels.update(n.label for n in postorder(f) if isinstance(n, Dia))
    return frozenset(labels)


def variables(*formulas: Formula) -> list[str]:
    names = set()
    for f in formulas:
        names.update(n.name for n in postorder(f) if isinstance(n, Var))
    return sorted(names)


def conj(parts: Iterable[Formula]) -> Formula:
    """Right-nested conjunction of `parts`; TOP when empty."""
    parts = list(parts)
    if not parts:
        return TOP
    result = parts[-1]
    for part in reversed(parts[:-1]):
        result = And(part, result)
    return result


def conjuncts(formula: Formula) -> list[Formula]:
    """Flatten nested conjunctions, left to right."""
    out, stack = [], [formula]
    while stack:
        node = stack.pop()
        if isinstance(node, And):
            stack.append(node.right)
            stack.append(node.left)
        else:
            out.append(node)
    return out


def substitute(formula: Formula, name: str, replacement: Formula) -> Formula:
    """Replace every occurrence of variable `name` by `replacement`."""
    target = Var(name) if isinstance(name, str) else name
    return fold(
        formula,
        lambda v: replacement if v is target else v,
        lambda t: t,
        lambda n, a, b: And(a, b),
        lambda n, b: Dia(n.label, b),
    )


def relabel(formula: Formula, mapping: Callable[[Label], Label]) -> Formula:
    return fold(
        formula,
        lambda v: v,
        lambda t: t,
        lambda n, a, b: And(a, b),
        lambda n, b: Dia(mapping(n.label), b),
    )


# --------------------------------------------------------------------------
# concrete syntax

class ParseError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        super().__init__(f"{message} at position {position}")
        self.position = position
        self.text = text


class LabelOverflowError(ParseError):
    pass


_TOKEN = re.compile(r"\s*(?:(\|-)|([a-z][a-z0-9_]*)|(\d+)|(\S))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        kind = ("turnstile", "ident", "digits", "punct")[m.lastindex - 1]
        tokens.append((kind, m.group(m.lastindex), m.start(m.lastindex)))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        found = "end of input" if tok[0] == "eof" else repr(tok[1])
        raise ParseError(f"{message}, found {found}", tok[2], self.text)

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] not in ("punct", "turnstile"):
            self.fail(f"expected {value!r}")
        return self.advance()

    def formula(self) -> Formula:
        result = self.atom()
        while self.peek()[:2] == ("punct", "&"):
            self.advance()
            result = And(result, self.atom())
        return result

    def atom(self) -> Formula:
        labels = []
        while self.peek()[:2] == ("punct", "<"):
            self.advance()
            labels.append(self.label())
            self.expect(">")
        kind, value, pos = self.peek()
        if kind == "punct" and value == "T":
            self.advance()
            base = TOP
        elif kind == "ident":
            self.advance()
            base = Var(value)
        elif kind == "punct" and value == "(":
            self.advance()
            base = self.formula()
            self.expect(")")
        else:
            self.fail("expected a formula")
        for label in reversed(labels):
            base = Dia(label, base)
        return base

    def label(self) -> Label:
        kind, value, pos = self.peek()
        if kind == "digits":
            self.advance()
            n = int(value)
            if n > MAX_LABEL:
                raise LabelOverflowError(f"modality label {value} exceeds 64 bits", pos, self.text)
            return n
        if kind == "ident" and value == "w":
            self.advance()
            return OMEGA
        self.fail("expected a modality label (digits or 'w')")


def parse(text: str) -> Union[Formula, Sequent]:
    """Parse a formula, or a sequent if the text contains ``|-``."""
    p = _Parser(text)
    left = p.formula()
    if p.peek()[0] == "turnstile":
        p.advance()
        right = p.formula()
        result: Union[Formula, Sequent] = Sequent(left, right)
    else:
        result = left
    if p.peek()[0] != "eof":
        p.fail("unexpected token")
    return result


def parse_formula(text: str) -> Formula:
    result = parse(text)
    if isinstance(result, Sequent):
        raise ParseError("expected a formula, not a sequent", text.index("|-"), text)
    return result


def parse_sequent(text: str) -> Sequent:
    result = parse(text)
    if not isinstance(result, Sequent):
        raise ParseError("expected a sequent 'A |- B'", len(text), text)
    return result


def render(formula: Formula) -> str:
    """Print with minimal parentheses; conjunction associates to the left."""
    def conj_(node, a, b):
        if isinstance(node.right, And):
            b = f"({b})"
        return f"{a} & {b}"

    def dia_(node, b):
        if isinstance(node.body, And):
            b = f"({b})"
        return f"<{label_str(node.label)}>{b}"

    return fold(formula, lambda v: v.name, lambda t: "T", conj_, dia_)


# --------------------------------------------------------------------------
# adequate sets

def adequate_closure(formulas: Iterable[Formula]) -> frozenset[Formula]:
    """Least adequate set containing `formulas`.

    Closed under subformulas, contains TOP, promotes every ``<b>A`` to
    ``<a>A`` for b < a in the signature, and adds ``<w>p`` for each variable p.
    """
    phi: set[Formula] = {TOP}
    for f in formulas:
        phi.update(postorder(f))
    while True:
        labels = {f.label for f in phi if isinstance(f, Dia)}
        new = set()
        for f in phi:
            if isinstance(f, Var):
                new.add(Dia(OMEGA, f))
            elif isinstance(f, Dia):
                new.update(Dia(a, f.body) for a in labels if f.label < a)
        new -= phi
        if not new:
            return frozenset(phi)
        for f in new:
            phi.update(postorder(f))


def is_adequate(phi: Iterable[Formula]) -> bool:
    phi = set(phi)
    if TOP not in phi:
        return False
    labels = {f.label for f in phi if isinstance(f, Dia)}
    for f in phi:
        if isinstance(f, And) and not (f.left in phi and f.right in phi):
            return False
        if isinstance(f, Var) and Dia(OMEGA, f) not in phi:
            return False
        if isinstance(f, Dia):
            if f.body not in phi:
                return False
            if any(Dia(a, f.body) not in phi for a in labels if f.label < a):
                return False
    return True


# --------------------------------------------------------------------------
# ordered normal form

def is_fact(formula: Formula) -> bool:
    return all(isinstance(c, (Var, Top)) for c in conjuncts(formula))


def is_ordered(formula: Formula, floor: Label = 0) -> bool:
    """Facts first, then diamonds with non-increasing labels whose bodies
    are ordered and use only labels at least as large as the diamond's."""
    stack = [(formula, floor)]
    while stack:
        node, lo = stack.pop()
        parts = conjuncts(node)
        seen_dia = False
        prev = None
        for part in parts:
            if isinstance(part, Dia):
                seen_dia = True
                if part.label < lo or (prev is not None and part.label > prev):
                    return False
                if any(lab < part.label for lab in signature(part.body)):
                    return False
                prev = part.label
                stack.append((part.body, part.label))
            elif seen_dia:
                return False
    return True


def _build_ordered(facts: tuple, dias: tuple) -> Formula:
    kept = [f for f in facts if not isinstance(f, Top)]
    parts = kept + [Dia(m, body) for m, body in dias]
    return conj(parts) if parts else TOP


def order(formula: Formula) -> Formula:
    """An RJ-equivalent ordered formula with the same canonical-tree size.

    Conjunctions are flattened and diamonds sorted by non-increasing label
    (stable).  A diamond ``<m>B`` whose body has conjuncts with labels below
    ``m`` keeps only the higher conjuncts inside and hoists the rest out.
    Redundant TOP conjuncts are dropped.
    """
    def leaf(node):
        return ((node,), ())

    def conj_(node, a, b):
        facts = a[0] + b[0]
        dias = tuple(sorted(a[1] + b[1], key=lambda d: d[0], reverse=True))
        return (facts, dias)

    def dia_(node, body):
        m = node.label
        facts, dias = body
        s = next((i for i, (mi, _) in enumerate(dias) if mi < m), len(dias))
        inner = _build_ordered(facts, dias[:s])
        return ((), ((m, inner),) + dias[s:])

    facts, dias = fold(formula, leaf, leaf, conj_, dia_)
    return _build_ordered(facts, dias)
