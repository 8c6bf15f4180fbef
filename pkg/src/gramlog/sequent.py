"""Nested sequents: trees of formula sets with letter-labelled edges.

Nodes are addressed by integer ids that are never reused. Contents only
grow; every mutating call reports whether something new was added.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

from .formula import Formula, Letter, NegAtom, Atom, parse_formula, parse_letter


@dataclass(frozen=True)
class Labeled:
    """A formula tagged with an automaton state, written ``s : A``."""
    state: str
    formula: Formula
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.state, self.formula)))

    def __hash__(self):
        return self._hash

    def sort_key(self):
        return (self.formula.size, str(self.formula), self.state)

    def __str__(self):
        return f"{self.state}:{self.formula}"


Item = Union[Formula, Labeled]


class UnknownNode(KeyError):
    pass


class _Node:
    __slots__ = ("formulas", "labeled", "parent", "letter", "children")

    def __init__(self, parent=None, letter=None):
        self.formulas: set[Formula] = set()
        self.labeled: set[Labeled] = set()
        self.parent = parent
        self.letter = letter
        self.children: list[int] = []


class NestedSequent:
    def __init__(self, formulas: Iterable[Formula] = ()):
        self.root = 0
        self._nodes = {0: _Node()}
        self._next = 1
        self.revision = 0
        self.add_formulas(0, formulas)
        self.revision = 0

    # --- construction -----------------------------------------------------

    def copy(self) -> "NestedSequent":
        new = NestedSequent.__new__(NestedSequent)
        new.root = self.root
        new._next = self._next
        new.revision = self.revision
        new._nodes = {}
        for i, n in self._nodes.items():
            m = _Node(n.parent, n.letter)
            m.formulas = set(n.formulas)
            m.labeled = set(n.labeled)
            m.children = list(n.children)
            new._nodes[i] = m
        return new

    def check_node(self, i) -> None:
        if i not in self._nodes:
            raise UnknownNode(f"no node {i!r} in sequent")

    def add_formulas(self, i: int, items: Iterable[Item]) -> bool:
        """Set union at node ``i``; bumps the revision iff something was new."""
        self.check_node(i)
        node = self._nodes[i]
        changed = False
        for x in items:
            target = node.labeled if isinstance(x, Labeled) else node.formulas
            if x not in target:
                target.add(x)
                changed = True
        if changed:
            self.revision += 1
        return changed

    def add_child(self, i: int, a: Letter, items: Iterable[Item] = ()) -> int:
        self.check_node(i)
        j = self._next
        self._next += 1
        self._nodes[j] = _Node(i, a)
        self._nodes[i].children.append(j)
        self.add_formulas(j, items)
        self.revision += 1
        return j

    # --- queries ----------------------------------------------------------

    def __contains__(self, i) -> bool:
        return i in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def node_ids(self) -> list[int]:
        return sorted(self._nodes)

    def formulas(self, i) -> frozenset[Formula]:
        self.check_node(i)
        return frozenset(self._nodes[i].formulas)

    def labeled(self, i) -> frozenset[Labeled]:
        self.check_node(i)
        return frozenset(self._nodes[i].labeled)

    def has(self, i, x: Item) -> bool:
        node = self._nodes[i]
        return x in (node.labeled if isinstance(x, Labeled) else node.formulas)

    def content(self, i, with_labels: bool = True):
        """The node's content as a hashable value for equality tests."""
        self.check_node(i)
        node = self._nodes[i]
        if with_labels:
            return (frozenset(node.formulas), frozenset(node.labeled))
        return frozenset(node.formulas)

    def content_size(self, i) -> int:
        node = self._nodes[i]
        return len(node.formulas) + len(node.labeled)

    def sorted_formulas(self, i) -> list[Formula]:
        return sorted(self._nodes[i].formulas, key=Formula.sort_key)

    def sorted_labeled(self, i) -> list[Labeled]:
        return sorted(self._nodes[i].labeled, key=Labeled.sort_key)

    def parent(self, i):
        self.check_node(i)
        return self._nodes[i].parent

    def edge_letter(self, i) -> Letter | None:
        """Letter on the edge from the parent of ``i`` to ``i``."""
        self.check_node(i)
        return self._nodes[i].letter

    def children(self, i) -> list[tuple[Letter, int]]:
        self.check_node(i)
        return [(self._nodes[j].letter, j) for j in self._nodes[i].children]

    def edges(self) -> list[tuple[int, Letter, int]]:
        return [(n.parent, n.letter, i) for i, n in sorted(self._nodes.items()) if n.parent is not None]

    def ancestors(self, i) -> list[int]:
        """Proper ancestors, closest first."""
        self.check_node(i)
        out = []
        p = self._nodes[i].parent
        while p is not None:
            out.append(p)
            p = self._nodes[p].parent
        return out

    def height(self, i) -> int:
        return len(self.ancestors(i))

    def is_leaf(self, i) -> bool:
        self.check_node(i)
        return not self._nodes[i].children

    def leaves(self) -> list[int]:
        return [i for i in self.node_ids() if not self._nodes[i].children]

    def internal_nodes(self) -> list[int]:
        return [i for i in self.node_ids() if self._nodes[i].children]

    def find_clash(self, nodes: Iterable[int] | None = None):
        """First ``(node, atom)`` with both ``p`` and ``~p`` at one node, else None."""
        for i in (self.node_ids() if nodes is None else nodes):
            fs = self._nodes[i].formulas
            hits = sorted(f.name for f in fs if isinstance(f, NegAtom) and Atom(f.name) in fs)
            if hits:
                return i, hits[0]
        return None

    def max_height(self) -> int:
        return max(self.height(i) for i in self._nodes)

    # --- output -----------------------------------------------------------

    def render(self, i=None, labels: bool = True) -> str:
        """Nested notation, e.g. ``p, q, <a>[ r, <b>[ s ] ]``."""
        i = self.root if i is None else i
        parts = [str(f) for f in self.sorted_formulas(i)]
        if labels:
            parts += [str(x) for x in self.sorted_labeled(i)]
        for a, j in self.children(i):
            inner = self.render(j, labels)
            parts.append(f"<{a}>[ {inner} ]" if inner else f"<{a}>[ ]")
        return ", ".join(parts)

    def to_json(self) -> dict:
        nodes = []
        for i in self.node_ids():
            n = self._nodes[i]
            nodes.append({
                "id": i,
                "parent": n.parent,
                "letter": None if n.letter is None else str(n.letter),
                "formulas": [str(f) for f in self.sorted_formulas(i)],
                "labeled": [{"state": x.state, "formula": str(x.formula)}
                            for x in self.sorted_labeled(i)],
            })
        return {"root": self.root, "nodes": nodes}

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_json(cls, data: dict) -> "NestedSequent":
        new = cls.__new__(cls)
        new.root = data["root"]
        new._nodes = {}
        new.revision = 0
        for row in data["nodes"]:
            letter = None if row["letter"] is None else parse_letter(row["letter"])
            node = _Node(row["parent"], letter)
            node.formulas = {parse_formula(s) for s in row["formulas"]}
            node.labeled = {Labeled(x["state"], parse_formula(x["formula"])) for x in row["labeled"]}
            new._nodes[row["id"]] = node
        for i, node in sorted(new._nodes.items()):
            if node.parent is not None:
                new._nodes[node.parent].children.append(i)
        new._next = max(new._nodes) + 1
        return new

    def __str__(self):
        return self.render()

    def __iter__(self) -> Iterator[int]:
        return iter(self.node_ids())
