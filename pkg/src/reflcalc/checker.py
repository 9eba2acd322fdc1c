"""Forcing on finite models and homomorphisms from canonical trees."""

from __future__ import annotations

from typing import Optional

from .formula import And, Dia, Formula, Sequent, Top, Var, postorder
from .kripke import Model, iter_bits

__all__ = ["truth_masks", "truth_mask", "check", "check_sequent", "find_homomorphism"]


def truth_masks(model: Model, formula: Formula) -> dict[Formula, int]:
    """Bitmask of nodes forcing each subformula, computed bottom-up.

    A diamond costs one pass over the rows of its own relation, so the
    whole evaluation is linear in (nodes + edges) times formula size.
    """
    out: dict[Formula, int] = {}
    everywhere = model.all_mask
    for node in postorder(formula):
        if isinstance(node, Var):
            out[node] = model.val.get(node.name, 0)
        elif isinstance(node, Top):
            out[node] = everywhere
        elif isinstance(node, And):
            out[node] = out[node.left] & out[node.right]
        else:
            body = out[node.body]
            m = 0
            if body:
                for x, ys in model.succ.get(node.label, {}).items():
                    if ys & body:
                        m |= 1 << x
            out[node] = m
    return out


def truth_mask(model: Model, formula: Formula) -> int:
    return truth_masks(model, formula)[formula]


def check(model: Model, x: int, formula: Formula) -> bool:
    """Whether `formula` is forced at node `x`."""
    if x not in model.nodes:
        raise ValueError(f"unknown node {x}")
    return bool(truth_mask(model, formula) >> x & 1)


def check_sequent(model: Model, sequent: Sequent) -> bool:
    """True iff every node forcing the antecedent forces the consequent."""
    a, b = sequent
    return not truth_mask(model, a) & ~truth_mask(model, b)


def _tree_children(src: Model) -> dict[int, list[tuple[object, int]]]:
    if src.root is None:
        raise ValueError("source model must be rooted")
    incoming: dict[int, int] = {}
    children: dict[int, list] = {x: [] for x in src.nodes}
    for label in src.labels:
        for x, ys in src.succ[label].items():
            for y in iter_bits(ys):
                if y in incoming or y == src.root:
                    raise ValueError("source model is not treelike")
                incoming[y] = x
                children[x].append((label, y))
    if len(incoming) != len(src.nodes) - 1:
        raise ValueError("source model is not treelike")
    for kids in children.values():
        kids.sort(key=lambda e: e[1])
    return children


def find_homomorphism(src: Model, dst: Model, x: int) -> Optional[dict[int, int]]:
    """A homomorphism from the tree model `src` into `dst` sending its root to `x`.

    Children are tried in id order and targets in ascending id; the first
    witness found is returned, or None if there is none.
    """
    if x not in dst.nodes:
        raise ValueError(f"unknown node {x}")
    children = _tree_children(src)
    required = {u: [p for p, m in src.val.items() if m >> u & 1] for u in src.nodes}
    memo: dict[tuple[int, int], Optional[dict]] = {}

    # postorder over src so every child's answers exist before its parent's
    order, stack = [], [src.root]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(c for _, c in children[u])
    order.reverse()

    def fits(u, w):
        return all(dst.val.get(p, 0) >> w & 1 for p in required[u])

    def solve(u, w):
        key = (u, w)
        if key in memo:
            return memo[key]
        result: Optional[dict] = None
        if fits(u, w):
            result = {u: w}
            for label, c in children[u]:
                found = None
                for t in iter_bits(dst.successors(label, w)):
                    found = solve(c, t)
                    if found is not None:
                        break
                if found is None:
                    result = None
                    break
                result.update(found)
        memo[key] = result
        return result

    # fill memo bottom-up so the final call never recurses deeply
    for u in order:
        if u == src.root:
            continue
        for w in sorted(dst.nodes):
            solve(u, w)
    return solve(src.root, x)
