"""Finite Kripke models over labelled relations.

A model stores, for every modality label that carries edges, a map from
node to the bitmask of its successors.  Node ids are non-negative ints and
double as bit positions; absent labels mean empty relations.
"""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional

from .formula import OMEGA, Label, check_label, label_str

__all__ = [
    "FrameKind", "Model", "iter_bits", "mask_of",
    "is_frame", "frame_violations", "is_persistent", "closure", "expand",
    "generated_submodel", "persist_valuation",
    "to_json", "from_json", "to_dot",
]


class FrameKind(enum.Enum):
    RJ = "rj"
    RC = "rc"


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(nodes: Iterable[int]) -> int:
    m = 0
    for n in nodes:
        m |= 1 << n
    return m


def _label_key(label: Label):
    return (1, 0) if label is OMEGA else (0, label)


@dataclass(frozen=True, eq=False)
class Model:
    """A finite Kripke model.

    ``succ[label][x]`` is the bitmask of R_label-successors of ``x``;
    ``val[p]`` is the bitmask of nodes where variable ``p`` holds.
    Build with :meth:`from_edges` when working with explicit pairs.
    """

    nodes: frozenset
    succ: Mapping[Label, Mapping[int, int]] = field(default_factory=dict)
    val: Mapping[str, int] = field(default_factory=dict)
    root: Optional[int] = None

    def __post_init__(self):
        nodes = frozenset(self.nodes)
        if any(not isinstance(n, int) or n < 0 for n in nodes):
            raise ValueError("node ids must be non-negative ints")
        all_mask = mask_of(nodes)
        succ = {}
        for label, rows in self.succ.items():
            label = check_label(label)
            clean = {}
            for x, m in rows.items():
                if not m:
                    continue
                if x not in nodes or m & ~all_mask:
                    raise ValueError(f"edge endpoint outside the node set (label {label_str(label)})")
                clean[x] = m
            if clean:
                succ[label] = clean
        val = {}
        for name, m in self.val.items():
            if m & ~all_mask:
                raise ValueError(f"variable {name} true at an undeclared node")
            if m:
                val[name] = m
        if self.root is not None and self.root not in nodes:
            raise ValueError(f"root {self.root} is not a node")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "succ", succ)
        object.__setattr__(self, "val", val)

    @classmethod
    def from_edges(cls, nodes: Iterable[int], edges: Mapping[Label, Iterable[tuple[int, int]]] = (),
                   valuation: Mapping[str, Iterable[int]] = (), root: Optional[int] = None) -> "Model":
        succ: dict = {}
        for label, pairs in dict(edges).items():
            rows = succ.setdefault(label, {})
            for x, y in pairs:
                rows[x] = rows.get(x, 0) | (1 << y)
        val = {p: mask_of(ns) for p, ns in dict(valuation).items()}
        return cls(frozenset(nodes), succ, val, root)

    # -- views ---------------------------------------------------------------

    @cached_property
    def all_mask(self) -> int:
        return mask_of(self.nodes)

    @property
    def labels(self) -> list[Label]:
        return sorted(self.succ, key=_label_key)

    def edges(self, label: Label) -> set[tuple[int, int]]:
        return {(x, y) for x, m in self.succ.get(label, {}).items() for y in iter_bits(m)}

    def all_edges(self) -> dict[Label, set[tuple[int, int]]]:
        return {label: self.edges(label) for label in self.labels}

    def successors(self, label: Label, x: int) -> int:
        return self.succ.get(label, {}).get(x, 0)

    def true_vars(self, x: int) -> list[str]:
        return sorted(p for p, m in self.val.items() if m >> x & 1)

    def holds(self, name: str, x: int) -> bool:
        return bool(self.val.get(name, 0) >> x & 1)

    @property
    def edge_count(self) -> int:
        return sum(m.bit_count() for rows in self.succ.values() for m in rows.values())

    @property
    def norm(self) -> int:
        """Nodes plus edges, the size that bounds model checking."""
        return len(self.nodes) + self.edge_count

    def replace(self, **changes) -> "Model":
        fields = dict(nodes=self.nodes, succ=self.succ, val=self.val, root=self.root)
        fields.update(changes)
        return Model(**fields)

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return (self.nodes == other.nodes and self.succ == other.succ
                and self.val == other.val and self.root == other.root)

    __hash__ = None

    def __repr__(self):
        edges = {label_str(a): sorted(self.edges(a)) for a in self.labels}
        vals = {p: sorted(iter_bits(m)) for p, m in sorted(self.val.items())}
        return f"Model(nodes={sorted(self.nodes)}, edges={edges}, val={vals}, root={self.root})"


# --------------------------------------------------------------------------
# frame conditions

def _check_signature(model: Model, S: Iterable[Label]) -> list[Label]:
    S = sorted(set(S), key=_label_key)
    extra = set(model.succ) - set(S)
    if extra:
        raise ValueError("model has edges for labels outside the signature: "
                         + ", ".join(label_str(a) for a in sorted(extra, key=_label_key)))
    return S


def frame_violations(model: Model, S: Iterable[Label], kind: FrameKind) -> list[str]:
    """Human-readable list of violated frame conditions (empty if none)."""
    S = _check_signature(model, S)
    out = []
    succ = model.succ
    for a in S:
        ra = succ.get(a, {})
        for b in S:
            rb = succ.get(b, {})
            rmin = succ.get(min(a, b), {})
            for x, ys in ra.items():
                # polytransitivity: x R_a y R_b z  =>  x R_min z
                reach = 0
                for y in iter_bits(ys):
                    reach |= rb.get(y, 0)
                if reach & ~rmin.get(x, 0):
                    out.append(f"polytransitivity R_{label_str(a)}R_{label_str(b)} at node {x}")
                # condition J: x R_a y, x R_b z, a > b  =>  y R_b z
                if a > b:
                    zs = rb.get(x, 0)
                    for y in iter_bits(ys):
                        if zs & ~rb.get(y, 0):
                            out.append(f"condition J ({label_str(a)} > {label_str(b)}) at {x}->{y}")
                # monotonicity: R_a within R_b for b < a
                if kind is FrameKind.RC and b < a and ys & ~rb.get(x, 0):
                    out.append(f"monotonicity R_{label_str(a)} in R_{label_str(b)} at node {x}")
    return out


def is_frame(model: Model, S: Iterable[Label], kind: FrameKind) -> bool:
    return not frame_violations(model, S, kind)


def is_persistent(model: Model) -> bool:
    """Variables true at x are true at every R_w-predecessor of x."""
    romega = model.succ.get(OMEGA, {})
    for m in model.val.values():
        for y, xs in romega.items():
            if xs & m and not m >> y & 1:
                return False
    return True


def closure(model: Model, S: Iterable[Label], kind: FrameKind) -> Model:
    """Least extension of the relations that is an RJ_S- or RC_S-frame.

    FIFO worklist over new edges; each new edge is combined with the
    existing ones under every applicable rule.  Nodes and valuation are kept.
    """
    S = _check_signature(model, S)
    succ = {a: dict(model.succ.get(a, {})) for a in S}
    pred: dict = {a: {} for a in S}
    agenda: deque = deque()
    for a in S:
        for x, ys in succ[a].items():
            for y in iter_bits(ys):
                pred[a][y] = pred[a].get(y, 0) | (1 << x)
                agenda.append((a, x, y))

    def add(a, x, y):
        row = succ[a].get(x, 0)
        if not row >> y & 1:
            succ[a][x] = row | (1 << y)
            pred[a][y] = pred[a].get(y, 0) | (1 << x)
            agenda.append((a, x, y))

    while agenda:
        a, x, y = agenda.popleft()
        for b in S:
            c = min(a, b)
            for z in iter_bits(succ[b].get(y, 0)):   # x R_a y R_b z
                add(c, x, z)
            for w in iter_bits(pred[b].get(x, 0)):   # w R_b x R_a y
                add(c, w, y)
            if a > b:                                # x R_a y, x R_b z
                for z in iter_bits(succ[b].get(x, 0)):
                    add(b, y, z)
            elif b > a:                              # x R_b z, x R_a y
                for z in iter_bits(succ[b].get(x, 0)):
                    add(a, z, y)
            if kind is FrameKind.RC and b < a:
                add(b, x, y)
    return model.replace(succ=succ)


def expand(model: Model, S: Iterable[Label], label: Label) -> Model:
    """Add a relation for a new label to an RC_S-model, keeping it an RC-model.

    Starts from the union of the relations with larger labels and iterates
    R' = R + RR + R_b^-1 R (b above the new label) to a fixpoint.
    """
    S = set(S)
    if label in S:
        raise ValueError(f"label {label_str(label)} is already in the signature")
    problems = frame_violations(model, S, FrameKind.RC)
    if problems:
        raise ValueError("expand needs an RC_S-model: " + problems[0])
    above = [b for b in S if b > label]
    rel: dict[int, int] = {}
    for b in above:
        for x, ys in model.succ.get(b, {}).items():
            rel[x] = rel.get(x, 0) | ys
    while above:
        new = dict(rel)
        for x, ys in rel.items():
            for y in iter_bits(ys):                  # RR
                new[x] |= rel.get(y, 0)
        for b in above:                              # R_b^-1 R
            rb = model.succ.get(b, {})
            for x, ys in rb.items():
                zs = rel.get(x, 0)
                if zs:
                    for y in iter_bits(ys):
                        new[y] = new.get(y, 0) | zs
        if new == rel:
            break
        rel = new
    succ = dict(model.succ)
    succ[label] = rel
    return model.replace(succ=succ)


def generated_submodel(model: Model, node: int) -> Model:
    """Restriction to the nodes reachable from `node`, rooted there."""
    if node not in model.nodes:
        raise ValueError(f"unknown node {node}")
    seen = 1 << node
    frontier = [node]
    while frontier:
        x = frontier.pop()
        for rows in model.succ.values():
            fresh = rows.get(x, 0) & ~seen
            if fresh:
                seen |= fresh
                frontier.extend(iter_bits(fresh))
    nodes = frozenset(iter_bits(seen))
    succ = {a: {x: m for x, m in rows.items() if x in nodes} for a, rows in model.succ.items()}
    val = {p: m & seen for p, m in model.val.items()}
    return Model(nodes, succ, val, node)


def persist_valuation(model: Model) -> Model:
    """Make each variable true wherever it holds at some R_w-successor."""
    romega = model.succ.get(OMEGA, {})
    if not romega:
        return model
    val = {}
    for p, m in model.val.items():
        extra = 0
        for x, ys in romega.items():
            if ys & m:
                extra |= 1 << x
        val[p] = m | extra
    return model.replace(val=val)


# --------------------------------------------------------------------------
# serialization

def to_json(model: Model) -> dict:
    edges = [{"from": x, "to": y, "mod": "w" if a is OMEGA else a}
             for a in model.labels for x, y in sorted(model.edges(a))]
    return {
        "nodes": sorted(model.nodes),
        "root": model.root,
        "edges": edges,
        "val": {p: sorted(iter_bits(m)) for p, m in sorted(model.val.items())},
    }


def from_json(data) -> Model:
    if isinstance(data, str):
        data = json.loads(data)
    edges: dict = {}
    for e in data.get("edges", []):
        mod = e["mod"]
        label = OMEGA if mod == "w" else mod
        edges.setdefault(label, []).append((e["from"], e["to"]))
    return Model.from_edges(data["nodes"], edges, data.get("val", {}), data.get("root"))


def to_dot(model: Model, name: str = "model") -> str:
    lines = [f"digraph {name} {{"]
    for x in sorted(model.nodes):
        label = ", ".join([str(x)] + model.true_vars(x))
        shape = ' shape="doublecircle"' if x == model.root else ""
        lines.append(f'  n{x} [label="{label}"{shape}];')
    for a in model.labels:
        for x, y in sorted(model.edges(a)):
            lines.append(f'  n{x} -> n{y} [label="{label_str(a)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
