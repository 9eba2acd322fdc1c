"""Canonical trees of formulas and their RJ / RC / RCw closures.

Node ids are assigned in preorder (a conjunction's left part before its
right part), so the same formula always yields the same numbering.  The RJ
and RC closures below are built directly from the tree structure rather
than by a generic fixpoint; :func:`reflcalc.kripke.closure` serves as the
reference they are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .formula import And, Dia, Formula, Label, Top, Var, order, signature
from .kripke import Model, iter_bits, persist_valuation

__all__ = ["Tree", "build_tree", "canonical_tree", "rj_model", "rc_model", "rcw_model"]


@dataclass
class Tree:
    """Parse tree of a formula viewed as a rooted labelled tree."""

    parent: list[int]
    label: list          # label of the edge into each node (None at the root)
    children: list[list[int]]
    val: dict[str, int]

    def __len__(self):
        return len(self.parent)

    def subtree_masks(self) -> list[int]:
        masks = [1 << i for i in range(len(self))]
        # preorder numbering: children have larger ids than their parents
        for i in range(len(self) - 1, 0, -1):
            masks[self.parent[i]] |= masks[i]
        return masks

    def to_model(self) -> Model:
        succ: dict = {}
        for i in range(1, len(self)):
            rows = succ.setdefault(self.label[i], {})
            p = self.parent[i]
            rows[p] = rows.get(p, 0) | (1 << i)
        return Model(frozenset(range(len(self))), succ, dict(self.val), 0)


def build_tree(formula: Formula) -> Tree:
    parent, label, children = [-1], [None], [[]]
    val: dict[str, int] = {}
    stack = [(formula, 0)]
    while stack:
        node, at = stack.pop()
        if isinstance(node, Var):
            val[node.name] = val.get(node.name, 0) | (1 << at)
        elif isinstance(node, And):
            stack.append((node.right, at))
            stack.append((node.left, at))
        elif isinstance(node, Dia):
            new = len(parent)
            parent.append(at)
            label.append(node.label)
            children.append([])
            children[at].append(new)
            stack.append((node.body, new))
        else:
            assert isinstance(node, Top)
    return Tree(parent, label, children, val)


def canonical_tree(formula: Formula) -> Model:
    """The canonical tree T[A], rooted at node 0."""
    return build_tree(formula).to_model()


def _require_signature(formula: Formula, S: Iterable[Label]) -> list:
    S = set(S)
    missing = signature(formula) - S
    if missing:
        raise ValueError("signature must contain every label of the formula")
    return sorted(S)


def rj_model(formula: Formula, S: Iterable[Label] | None = None) -> Model:
    """RJ_S[A] by the path rule.

    For x above y on one branch, x R_n y with n the least label on the path.
    For x, y in different branches below z = x meet y, x R_n y iff the least
    label from z to x exceeds the least label n from z to y.
    """
    if S is not None:
        _require_signature(formula, S)
    tree = build_tree(formula)
    n = len(tree)
    succ: dict = {}

    def add(a, x, ymask):
        rows = succ.setdefault(a, {})
        rows[x] = rows.get(x, 0) | ymask

    for z in range(n):
        # least label on the path from z to each proper descendant, grouped by child branch
        branches = []
        for c in tree.children[z]:
            mins = {c: tree.label[c]}
            stack = [c]
            while stack:
                u = stack.pop()
                for v in tree.children[u]:
                    mins[v] = min(mins[u], tree.label[v])
                    stack.append(v)
            branches.append(mins)
        by_label: dict = {}
        for mins in branches:
            for d, m in mins.items():
                by_label[m] = by_label.get(m, 0) | (1 << d)
        for a, ymask in by_label.items():
            add(a, z, ymask)
        if len(branches) < 2:
            continue
        for i, xs in enumerate(branches):
            others: dict = {}
            for j, ys in enumerate(branches):
                if j != i:
                    for d, m in ys.items():
                        others[m] = others.get(m, 0) | (1 << d)
            for x, mx in xs.items():
                for a, ymask in others.items():
                    if mx > a:
                        add(a, x, ymask)
    return Model(frozenset(range(n)), succ, dict(tree.val), 0)


def rc_model(formula: Formula, S: Iterable[Label] | None = None) -> Model:
    """RC_S[A] built block by block on the tree of ``order(A)``.

    At each node the children form blocks of equal label m_0 > ... > m_{k-1};
    the node reaches every node below block i at all labels n <= m_i, all
    nodes below blocks 0..i are related at labels m_{i+1} <= n < m_i
    (m_k = 0), and nodes below earlier blocks reach block i at m_i.
    Labels are always drawn from S intersected with [incoming label, w].
    """
    ordered = order(formula)
    S = _require_signature(formula, S if S is not None else signature(formula))
    tree = build_tree(ordered)
    below = tree.subtree_masks()
    n = len(tree)
    succ: dict = {a: {} for a in S}

    def add(a, x, ymask):
        rows = succ[a]
        rows[x] = rows.get(x, 0) | ymask

    for at in range(n):
        kids = tree.children[at]
        if not kids:
            continue
        floor = tree.label[at]
        local = [a for a in S if floor is None or a >= floor]
        blocks: list[tuple] = []           # (label, mask of all nodes below the block)
        for c in kids:
            m = tree.label[c]
            if blocks and blocks[-1][0] == m:
                blocks[-1] = (m, blocks[-1][1] | below[c])
            else:
                assert not blocks or blocks[-1][0] > m, "tree of an ordered formula"
                blocks.append((m, below[c]))
        prefix = 0
        for i, (m, mask) in enumerate(blocks):
            for a in local:
                if a <= m:
                    add(a, at, mask)                              # clause 1
            if prefix:
                for x in iter_bits(prefix):
                    add(m, x, mask)                               # clause 3
            prefix |= mask
            lo = blocks[i + 1][0] if i + 1 < len(blocks) else 0
            cross = [a for a in local if lo <= a < m]
            if cross:
                for x in iter_bits(prefix):
                    for a in cross:
                        add(a, x, prefix)                         # clause 2
    return Model(frozenset(range(n)), succ, dict(tree.val), 0)


def rcw_model(formula: Formula, S: Iterable[Label] | None = None) -> Model:
    """RC_S[A] with the valuation made persistent along R_w."""
    return persist_valuation(rc_model(formula, S))

