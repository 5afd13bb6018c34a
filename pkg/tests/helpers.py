"""Independent oracles and generators shared by the test modules."""

import json
import random
from pathlib import Path

import numpy as np

from molspace.molgraph import ELEMENT_SYMBOL, BondOrder, MolGraph

FIXTURES = Path(__file__).parent / "fixtures"


def parser_corpus():
    return json.loads((FIXTURES / "parser_corpus.json").read_text())["molecules"]


def brute_force_swaps(a, b):
    """Discordant pairs by enumerating every (i, j) -- O(n^2)."""
    pos_a = {x: i for i, x in enumerate(a)}
    pos_b = {x: i for i, x in enumerate(b)}
    items = list(a)
    ra = np.array([pos_a[x] for x in items])
    rb = np.array([pos_b[x] for x in items])
    da = np.sign(ra[:, None] - ra[None, :])
    db = np.sign(rb[:, None] - rb[None, :])
    return int(np.count_nonzero(da * db < 0) // 2)


def eq1_by_definition(records, m1, m2):
    """Docking distance written out from the formula with plain loops.

    ``records`` is a list of (mol, target, score). Returns (value, count).
    """
    by_target = {}
    for m, t, s in records:
        by_target.setdefault(t, {})[m] = s
    total = 0.0
    count = 0
    for t in sorted(by_target):
        scores = by_target[t]
        if len(scores) < 2:
            continue
        hi, lo = max(scores.values()), min(scores.values())
        if hi == lo or m1 not in scores or m2 not in scores:
            continue
        total += abs(scores[m1] - scores[m2]) / (hi - lo)
        count += 1
    return total, count


def _atom_token(atom, h):
    sym = ELEMENT_SYMBOL[atom.element]
    if atom.aromatic:
        sym = sym.lower()
    if not atom.bracket:
        return sym
    out = "[" + (str(atom.isotope) if atom.isotope is not None else "") + sym
    if h:
        out += "H" + (str(h) if h > 1 else "")
    q = atom.formal_charge
    if q:
        out += ("+" if q > 0 else "-") + (str(abs(q)) if abs(q) > 1 else "")
    return out + "]"


def _bond_token(graph, u, v, order):
    au, av = graph.atoms[u].aromatic, graph.atoms[v].aromatic
    if order is BondOrder.DOUBLE:
        return "="
    if order is BondOrder.TRIPLE:
        return "#"
    if order is BondOrder.AROMATIC:
        return "" if au and av else ":"
    return "-" if au and av else ""


def random_smiles(graph: MolGraph, rng: random.Random) -> str:
    """Write ``graph`` as SMILES with a random root, branch order and fragment order."""
    n = len(graph.atoms)
    adj = graph.adjacency
    visited = [False] * n
    children = [[] for _ in range(n)]
    ring_bonds = [[] for _ in range(n)]
    roots = []
    order = list(range(n))
    rng.shuffle(order)
    for root in order:
        if visited[root]:
            continue
        roots.append(root)
        visited[root] = True
        seen_edges = set()

        # DFS recording tree children in visit order; other edges close rings
        def visit(v):
            nbrs = list(adj[v])
            rng.shuffle(nbrs)
            for w, bo in nbrs:
                edge = frozenset((v, w))
                if edge in seen_edges:
                    continue
                seen_edges.add(edge)
                if visited[w]:
                    ring_bonds[v].append((w, bo))
                    ring_bonds[w].append((v, bo))
                else:
                    visited[w] = True
                    children[v].append((w, bo))
                    visit(w)

        visit(root)

    emitted = [False] * n
    open_digits = {}
    free = list(range(1, 100))

    def digit(d):
        return str(d) if d < 10 else f"%{d}"

    def emit(v, out):
        out.append(_atom_token(graph.atoms[v], graph.hydrogens[v]))
        emitted[v] = True
        for w, bo in ring_bonds[v]:
            key = frozenset((v, w))
            if emitted[w]:
                d = open_digits.pop(key)
                free.append(d)
                free.sort()
                out.append(digit(d))
            else:
                d = free.pop(0)
                open_digits[key] = d
                out.append(_bond_token(graph, v, w, bo) + digit(d))
        kids = children[v]
        for i, (w, bo) in enumerate(kids):
            last = i == len(kids) - 1
            if not last:
                out.append("(")
            out.append(_bond_token(graph, v, w, bo))
            emit(w, out)
            if not last:
                out.append(")")

    pieces = []
    for root in roots:
        out = []
        emit(root, out)
        pieces.append("".join(out))
    return ".".join(pieces)
