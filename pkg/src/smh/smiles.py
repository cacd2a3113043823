"""SMILES-subset parser producing heavy-atom skeleton graphs, and CSV dataset loading."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from smh.errors import EmptyDataset, IsolatedNode, MissingColumn, ParseError
from smh.graph import Graph

logger = logging.getLogger(__name__)

ORGANIC = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
AROMATIC = ("b", "c", "n", "o", "p", "s")
BOND_CHARS = "-=#:$/\\"

# element symbols accepted inside brackets
ELEMENTS = frozenset(
    """H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn
    Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce Pr
    Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn Fr Ra
    Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr""".split()
)
BRACKET_AROMATIC = ("se", "as", "te", "b", "c", "n", "o", "p", "s")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.labels: list = []
        self.edges: set = set()

    def fail(self, message, pos=None):
        pos = self.pos if pos is None else pos
        raise ParseError(message, len(self.text[:pos].encode("utf-8")))

    def add_atom(self, label):
        self.labels.append(label)
        return len(self.labels) - 1

    def add_bond(self, a, b, pos):
        if a == b:
            self.fail("ring bond from an atom to itself", pos)
        self.edges.add((min(a, b), max(a, b)))

    def bracket_atom(self):
        start = self.pos
        end = self.text.find("]", start)
        if end < 0:
            self.fail("unterminated bracket atom", start)
        body = self.text[start + 1 : end]
        i = 0
        while i < len(body) and body[i].isdigit():
            i += 1
        isotope = body[:i]
        symbol = None
        for cand in BRACKET_AROMATIC:
            if body.startswith(cand, i):
                symbol = cand.capitalize()
                i += len(cand)
                break
        if symbol is None:
            if body[i : i + 2] in ELEMENTS and len(body) >= i + 2 and body[i + 1].islower():
                symbol = body[i : i + 2]
                i += 2
            elif body[i : i + 1] in ELEMENTS:
                symbol = body[i]
                i += 1
            else:
                self.fail("unknown element in bracket atom", start + 1 + i)
        while i < len(body) and body[i] == "@":
            i += 1
        # TH1/AL2-style chirality classes are not supported
        if i < len(body) and body[i] == "H":
            i += 1
            while i < len(body) and body[i].isdigit():
                i += 1
        charge = ""
        if i < len(body) and body[i] in "+-":
            sign = body[i]
            j = i
            while j < len(body) and body[j] == sign:
                j += 1
            count = j - i
            k = j
            while k < len(body) and body[k].isdigit():
                k += 1
            if k > j:
                if count > 1:
                    self.fail("malformed charge", start + 1 + i)
                count = int(body[j:k])
            i = k
            if count:
                charge = sign if count == 1 else f"{sign}{count}"
        if i < len(body) and body[i] == ":":
            j = i + 1
            while j < len(body) and body[j].isdigit():
                j += 1
            if j == i + 1:
                self.fail("malformed atom class", start + 1 + i)
            i = j
        if i != len(body):
            self.fail("unexpected character in bracket atom", start + 1 + i)
        self.pos = end + 1
        return f"{isotope}{symbol}{charge}"

    def parse(self):
        text = self.text
        prev = None
        bond_pending = None  # offset of an unconsumed bond symbol
        branches: list = []
        rings: dict = {}
        while self.pos < len(text):
            ch = text[self.pos]
            here = self.pos
            if ch == "[" or ch.isalpha():
                if ch == "[":
                    label = self.bracket_atom()
                else:
                    label = None
                    for sym in ORGANIC:
                        if text.startswith(sym, here):
                            label = sym
                            break
                    if label is None and ch in AROMATIC:
                        label = ch.upper()
                    if label is None:
                        self.fail(f"unknown atom {ch!r}")
                    self.pos += len(label)
                atom = self.add_atom(label)
                if prev is not None:
                    self.add_bond(prev, atom, here)
                prev = atom
                bond_pending = None
            elif ch in BOND_CHARS:
                if prev is None:
                    self.fail("bond without a preceding atom")
                if bond_pending is not None:
                    self.fail("consecutive bond symbols")
                bond_pending = here
                self.pos += 1
            elif ch.isdigit() or ch == "%":
                if prev is None:
                    self.fail("ring closure without a preceding atom")
                if ch == "%":
                    digits = text[here + 1 : here + 3]
                    if len(digits) != 2 or not digits.isdigit():
                        self.fail("malformed %nn ring closure")
                    ring_id = int(digits)
                    self.pos += 3
                else:
                    ring_id = int(ch)
                    self.pos += 1
                if ring_id in rings:
                    other, _ = rings.pop(ring_id)
                    self.add_bond(prev, other, here)
                else:
                    rings[ring_id] = (prev, here)
                bond_pending = None
            elif ch == "(":
                if prev is None:
                    self.fail("branch without a preceding atom")
                if bond_pending is not None:
                    self.fail("bond symbol before branch")
                branches.append((prev, here))
                self.pos += 1
                if self.pos < len(text) and text[self.pos] == ")":
                    self.fail("empty branch")
            elif ch == ")":
                if not branches:
                    self.fail("unbalanced ')'")
                if bond_pending is not None:
                    self.fail("dangling bond symbol", bond_pending)
                prev, _ = branches.pop()
                self.pos += 1
            elif ch == ".":
                if bond_pending is not None or prev is None:
                    self.fail("misplaced '.'")
                if branches:
                    self.fail("'.' inside a branch")
                prev = None
                self.pos += 1
            else:
                self.fail(f"unexpected character {ch!r}")
        if bond_pending is not None:
            self.fail("dangling bond symbol", bond_pending)
        if branches:
            self.fail("unbalanced '('", branches[-1][1])
        if rings:
            self.fail("unclosed ring bond", min(p for _, p in rings.values()))
        if prev is None:
            self.fail("empty SMILES")
        return self.labels, self.edges


def parse_smiles(s: str) -> Graph:
    """Parse ``s`` into its heavy-atom skeleton graph.

    Explicit hydrogens and hydrogen counts are dropped, bond orders are ignored, and
    for multi-component inputs only the largest component is kept (ties keep the first).
    Raises :class:`ParseError` carrying the byte offset of the fault.
    """
    if not s:
        raise ParseError("empty SMILES", 0)
    labels, edges = _Parser(s).parse()
    g = Graph(len(labels), frozenset(edges), tuple(labels))
    heavy = [i for i, lab in enumerate(labels) if lab.lstrip("0123456789").rstrip("+-0123456789") != "H"]
    if not heavy:
        raise ParseError("no heavy atoms", 0)
    if len(heavy) < len(labels):
        g = g.subgraph(heavy)
    comps = g.components()
    if len(comps) > 1:
        largest = max(comps, key=len)
        logger.warning("multi-component SMILES %r: keeping largest component (%d of %d atoms)",
                       s, len(largest), g.node_count)
        g = g.subgraph(largest)
    return g


@dataclass(frozen=True)
class Record:
    graph: Graph
    target: float
    source_row: int


@dataclass
class Dataset:
    records: list
    name: str = ""
    skipped: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def targets(self):
        return [r.target for r in self.records]

    @property
    def graphs(self):
        return [r.graph for r in self.records]

    def subset(self, indices, name=None) -> "Dataset":
        return Dataset([self.records[i] for i in indices], name or self.name)

    def to_json(self) -> str:
        rows = [
            {
                "row": r.source_row,
                "target": r.target,
                "nodes": list(r.graph.node_labels),
                "edges": [list(e) for e in r.graph.sorted_edges()],
            }
            for r in self.records
        ]
        return json.dumps({"name": self.name, "records": rows}, sort_keys=True)


def load_csv(path, smiles_column: str = "smiles", target_column: str = "target") -> Dataset:
    """Load ``(SMILES, target)`` rows; unparseable rows and rows with isolated atoms are skipped."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    records = []
    skipped = {"parse_error": 0, "isolated_node": 0, "bad_target": 0}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (smiles_column, target_column):
            if col not in header:
                raise MissingColumn(f"column {col!r} not in header {header}")
        for row_idx, row in enumerate(reader):
            try:
                target = float(row[target_column])
            except (TypeError, ValueError):
                skipped["bad_target"] += 1
                continue
            if not math.isfinite(target):
                skipped["bad_target"] += 1
                continue
            try:
                g = parse_smiles((row[smiles_column] or "").strip())
            except ParseError as exc:
                logger.warning("row %d: %s", row_idx, exc)
                skipped["parse_error"] += 1
                continue
            if g.edge_count == 0 or g.degrees().min() == 0:
                logger.warning("row %d: dropping graph with isolated node", row_idx)
                skipped["isolated_node"] += 1
                continue
            records.append(Record(g, target, row_idx))
    if not records:
        raise EmptyDataset(f"no usable rows in {path}")
    return Dataset(records, path.stem, skipped)


def check_graph(g: Graph) -> None:
    """Raise :class:`IsolatedNode` unless every node has at least one neighbour."""
    if g.degrees().min() == 0:
        raise IsolatedNode("graph has an isolated node")
