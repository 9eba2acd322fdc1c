"""Exhaustive and random formula generators shared by the test modules."""

from __future__ import annotations

import random
from functools import lru_cache

from reflcalc.formula import OMEGA, TOP, And, Dia, Formula, Sequent, Var, fold

LABELS = (0, 1, OMEGA)
VARS = ("p", "q")


@lru_cache(maxsize=None)
def formulas_of_size(n: int, names: tuple = VARS, labels: tuple = LABELS) -> tuple[Formula, ...]:
    """Every formula of exactly size n (And counts 1 + both sides, Dia 1 + body)."""
    if n < 1:
        return ()
    out: list[Formula] = []
    if n == 1:
        out.append(TOP)
        out.extend(Var(x) for x in names)
        return tuple(out)
    for a in labels:
        out.extend(Dia(a, f) for f in formulas_of_size(n - 1, names, labels))
    for k in range(1, n - 1):
        for left in formulas_of_size(k, names, labels):
            for right in formulas_of_size(n - 1 - k, names, labels):
                out.append(And(left, right))
    return tuple(out)


def formulas_up_to(n: int, names: tuple = VARS, labels: tuple = LABELS) -> list[Formula]:
    return [f for k in range(1, n + 1) for f in formulas_of_size(k, names, labels)]


def _swap(f: Formula) -> Formula:
    swap = {"p": Var("q"), "q": Var("p")}
    return fold(f, lambda v: swap.get(v.name, v), lambda t: t,
                lambda n, a, b: And(a, b), lambda n, b: Dia(n.label, b))


def sequent_corpus(total: int = 6) -> list[Sequent]:
    """All sequents with |A| + |B| <= total over p, q and labels 0, 1, w,
    one representative per p/q renaming."""
    seen = set()
    out = []
    for sa in range(1, total):
        for sb in range(1, total - sa + 1):
            for a in formulas_of_size(sa):
                for b in formulas_of_size(sb):
                    s = Sequent(a, b)
                    if s in seen:
                        continue
                    seen.add(s)
                    seen.add(Sequent(_swap(a), _swap(b)))
                    out.append(s)
    return out


def random_formula(rng: random.Random, size: int, names: tuple = VARS,
                   labels: tuple = LABELS) -> Formula:
    """A random formula of exactly the given size."""
    if size <= 1:
        return rng.choice((TOP,) + tuple(Var(x) for x in names))
    if size == 2 or rng.random() < 0.45:
        return Dia(rng.choice(labels), random_formula(rng, size - 1, names, labels))
    k = rng.randint(1, size - 2)
    return And(random_formula(rng, k, names, labels), random_formula(rng, size - 1 - k, names, labels))


def weaken(rng: random.Random, f: Formula, lower: bool = False) -> Formula:
    """A random consequence of f built from conjunction elimination, Top
    introduction and the diamond rule; with `lower`, diamonds may also drop
    to a smaller label (monotonicity)."""
    roll = rng.random()
    if roll < 0.08:
        return TOP
    if isinstance(f, And):
        if roll < 0.35:
            return weaken(rng, f.left, lower)
        if roll < 0.6:
            return weaken(rng, f.right, lower)
        return And(weaken(rng, f.left, lower), weaken(rng, f.right, lower))
    if isinstance(f, Dia):
        label = f.label
        if lower and rng.random() < 0.3:
            smaller = [a for a in LABELS if a < label]
            if smaller:
                label = rng.choice(smaller)
        return Dia(label, weaken(rng, f.body, lower))
    return f
