"""Heavy-atom molecular graphs parsed from a subset of SMILES.

Supported grammar: organic-subset atoms (``B C N O P S F Cl Br I`` and the
aromatic ``b c n o p s``), bracket atoms ``[isotope? symbol H<n>? charge?]``,
bonds ``- = # :``, branches, ring closures ``0-9`` and ``%nn``, and ``.``
separated fragments. Stereo markers, wildcards, atom classes and quadruple
bonds raise :class:`UnsupportedFeature`. Aromaticity is read verbatim from the
input; no ring perception is done.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

from .errors import (
    EmptyInput,
    InvalidSyntax,
    UnbalancedParenthesis,
    UnknownElement,
    UnmatchedRingBond,
    UnsupportedFeature,
    ValenceViolation,
)

_SYMBOLS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni "
    "Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I "
    "Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt "
    "Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr "
    "Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og"
).split()
ATOMIC_NUMBER = {sym: z for z, sym in enumerate(_SYMBOLS, start=1)}
ELEMENT_SYMBOL = {z: sym for sym, z in ATOMIC_NUMBER.items()}

_DIGITS = "0123456789"
_AROMATIC_ORGANIC = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S"}
_AROMATIC_BRACKET = {**_AROMATIC_ORGANIC, "se": "Se", "as": "As"}

# allowed valences for organic-subset atoms, ascending
DEFAULT_VALENCES = {
    5: (3,),
    6: (4,),
    7: (3,),
    8: (2,),
    15: (3, 5),
    16: (2, 4, 6),
    9: (1,),
    17: (1,),
    35: (1,),
    53: (1,),
}


class BondOrder(enum.IntEnum):
    """Bond type; the integer value doubles as the fingerprint bond code."""

    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self) -> int:
        # aromatic bonds count once; the pi contribution is added per atom
        return 1 if self is BondOrder.AROMATIC else int(self)


_BOND_SYMBOLS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
}


@dataclass(frozen=True)
class Atom:
    element: int
    formal_charge: int = 0
    explicit_h: int | None = None
    aromatic: bool = False
    isotope: int | None = None
    bracket: bool = False

    def __post_init__(self):
        if self.element not in ELEMENT_SYMBOL:
            raise ValueError(f"invalid atomic number {self.element}")
        if self.explicit_h is not None and self.explicit_h < 0:
            raise ValueError("explicit_h must be non-negative")

    @property
    def symbol(self) -> str:
        return ELEMENT_SYMBOL[self.element]


@dataclass(frozen=True)
class Bond:
    begin: int
    end: int
    order: BondOrder = BondOrder.SINGLE

    def __post_init__(self):
        if self.begin == self.end:
            raise ValueError("bond endpoints must be distinct")


@dataclass(frozen=True)
class MolGraph:
    """Immutable heavy-atom graph.

    ``atom_offsets`` records where each atom token started in the source
    string and is used for error reporting only.
    """

    mol_id: str
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    atom_offsets: tuple[int, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        n = len(self.atoms)
        seen = set()
        for bond in self.bonds:
            if not (0 <= bond.begin < n and 0 <= bond.end < n):
                raise ValueError(f"bond {bond} references a missing atom")
            key = frozenset((bond.begin, bond.end))
            if key in seen:
                raise ValueError(f"duplicate bond between {bond.begin} and {bond.end}")
            seen.add(key)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, BondOrder], ...], ...]:
        """Per-atom ``(neighbor, bond order)`` lists."""
        nbrs: list[list[tuple[int, BondOrder]]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            nbrs[bond.begin].append((bond.end, bond.order))
            nbrs[bond.end].append((bond.begin, bond.order))
        return tuple(tuple(x) for x in nbrs)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(x) for x in self.adjacency)

    @cached_property
    def hydrogens(self) -> tuple[int, ...]:
        return implicit_hydrogens(self)

    @cached_property
    def ring_atoms(self) -> tuple[bool, ...]:
        """True for atoms that lie on at least one cycle."""
        in_ring = [False] * len(self.atoms)
        for i, bond in enumerate(self.bonds):
            if i not in self._bridges:
                in_ring[bond.begin] = in_ring[bond.end] = True
        return tuple(in_ring)

    @cached_property
    def _bridges(self) -> frozenset[int]:
        # iterative Tarjan bridge search over bond indices
        n = len(self.atoms)
        incident: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for i, bond in enumerate(self.bonds):
            incident[bond.begin].append((bond.end, i))
            incident[bond.end].append((bond.begin, i))
        disc = [-1] * n
        low = [0] * n
        bridges = set()
        clock = 0
        for root in range(n):
            if disc[root] >= 0:
                continue
            disc[root] = low[root] = clock
            clock += 1
            stack = [(root, -1, iter(incident[root]))]
            while stack:
                node, via, it = stack[-1]
                for nbr, b in it:
                    if b == via:
                        continue
                    if disc[nbr] < 0:
                        disc[nbr] = low[nbr] = clock
                        clock += 1
                        stack.append((nbr, b, iter(incident[nbr])))
                        break
                    low[node] = min(low[node], disc[nbr])
                else:
                    stack.pop()
                    if stack:
                        parent = stack[-1][0]
                        low[parent] = min(low[parent], low[node])
                        if low[node] > disc[parent]:
                            bridges.add(via)
        return frozenset(bridges)

    @cached_property
    def n_fragments(self) -> int:
        parent = list(range(len(self.atoms)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for bond in self.bonds:
            parent[find(bond.begin)] = find(bond.end)
        return len({find(i) for i in range(len(self.atoms))})


def implicit_hydrogens(graph: MolGraph) -> tuple[int, ...]:
    """Hydrogen count per atom.

    Organic-subset atoms take the smallest allowed valence that covers their
    bond-order sum. Aromatic atoms first try to reserve one extra valence
    unit for the pi system at their lowest valence (so ``c`` in benzene gets
    one H, ``n`` in pyridine none) and fall back to the plain sum, which
    handles ``o`` and ``s`` in five-membered rings. Bracket atoms carry their
    count explicitly.
    """
    counts = []
    for idx, (atom, nbrs) in enumerate(zip(graph.atoms, graph.adjacency)):
        if atom.bracket or atom.element not in DEFAULT_VALENCES:
            counts.append(atom.explicit_h or 0)
            continue
        used = sum(order.valence for _, order in nbrs)
        allowed = DEFAULT_VALENCES[atom.element]
        if atom.aromatic and allowed[0] >= used + 1:
            counts.append(allowed[0] - used - 1)
            continue
        for v in allowed:
            if v >= used:
                counts.append(v - used)
                break
        else:
            offset = graph.atom_offsets[idx] if graph.atom_offsets else idx
            raise ValenceViolation(
                f"{atom.symbol} atom {idx} has bond order sum {used}, "
                f"above every allowed valence {allowed}",
                offset,
            )
    return tuple(counts)


def _parse_bracket(s: str, start: int) -> tuple[Atom, int]:
    """Parse ``[...]`` beginning at ``s[start] == '['``; return atom and end index."""
    close = s.find("]", start + 1)
    if close < 0:
        raise InvalidSyntax("unterminated bracket atom", start, s)
    i = start + 1

    j = i
    while j < close and s[j] in _DIGITS:
        j += 1
    isotope = int(s[i:j]) if j > i else None
    i = j

    if i >= close:
        raise InvalidSyntax("bracket atom without element", start, s)
    c = s[i]
    if c == "*":
        raise UnsupportedFeature("wildcard atom", i, s)
    two = s[i:i + 2]
    if two in _AROMATIC_BRACKET and i + 2 <= close:
        element, aromatic, i = ATOMIC_NUMBER[_AROMATIC_BRACKET[two]], True, i + 2
    elif c in _AROMATIC_BRACKET:
        element, aromatic, i = ATOMIC_NUMBER[_AROMATIC_BRACKET[c]], True, i + 1
    elif c.isupper():
        if i + 1 < close and s[i + 1].islower() and two in ATOMIC_NUMBER:
            element, i = ATOMIC_NUMBER[two], i + 2
        elif c in ATOMIC_NUMBER:
            element, i = ATOMIC_NUMBER[c], i + 1
        else:
            raise UnknownElement(f"unknown element {two!r}", i, s)
        aromatic = False
        if i < close and s[i].islower():
            raise UnknownElement(f"unknown element {s[i - 1:i + 1]!r}", i - 1, s)
    else:
        raise UnknownElement(f"unknown element {c!r}", i, s)

    hcount = None
    charge = None
    while i < close:
        c = s[i]
        if c == "@":
            raise UnsupportedFeature("stereo marker", i, s)
        if c == ":":
            raise UnsupportedFeature("atom class", i, s)
        if c == "H" and hcount is None:
            j = i + 1
            while j < close and s[j] in _DIGITS:
                j += 1
            hcount = int(s[i + 1:j]) if j > i + 1 else 1
            i = j
        elif c in "+-" and charge is None:
            sign = 1 if c == "+" else -1
            j = i + 1
            if j < close and s[j] in _DIGITS:
                k = j
                while k < close and s[k] in _DIGITS:
                    k += 1
                charge = sign * int(s[j:k])
                i = k
            else:
                while j < close and s[j] == c:
                    j += 1
                charge = sign * (j - i)
                i = j
        else:
            raise InvalidSyntax(f"unexpected {c!r} in bracket atom", i, s)

    atom = Atom(
        element=element,
        formal_charge=charge or 0,
        explicit_h=hcount if hcount is not None else 0,
        aromatic=aromatic,
        isotope=isotope,
        bracket=True,
    )
    return atom, close + 1


def parse_smiles(smiles: str | bytes, mol_id: str = "") -> MolGraph:
    """Parse ``smiles`` into a :class:`MolGraph`.

    Atom indices follow token order. Every failure raises a subclass of
    :class:`~molspace.errors.SmilesError` carrying the byte offset of the
    offending token.
    """
    if isinstance(smiles, (bytes, bytearray)):
        try:
            smiles = bytes(smiles).decode("ascii")
        except UnicodeDecodeError as exc:
            raise InvalidSyntax("non-ASCII byte", exc.start, None) from None
    s = smiles
    if not s:
        raise EmptyInput("empty SMILES", 0, s)

    atoms: list[Atom] = []
    offsets: list[int] = []
    bonds: dict[frozenset, Bond] = {}
    prev: int | None = None
    pending: tuple[BondOrder, int] | None = None
    branches: list[tuple[int, int]] = []
    rings: dict[int, tuple[int, BondOrder | None, int]] = {}
    last = None  # kind of the previous token
    n = len(s)
    i = 0

    def add_bond(a, b, order, at):
        key = frozenset((a, b))
        if a == b:
            raise InvalidSyntax("ring closure bonds an atom to itself", at, s)
        if key in bonds:
            raise InvalidSyntax("duplicate bond between the same atoms", at, s)
        bonds[key] = Bond(a, b, order)

    while i < n:
        c = s[i]
        start = i
        if c == "[" or c in "BCNOPSFI" or c in _AROMATIC_ORGANIC:
            if c == "[":
                atom, i = _parse_bracket(s, i)
            elif s.startswith("Cl", i) or s.startswith("Br", i):
                atom, i = Atom(ATOMIC_NUMBER[s[i:i + 2]]), i + 2
            elif c in _AROMATIC_ORGANIC:
                atom, i = Atom(ATOMIC_NUMBER[_AROMATIC_ORGANIC[c]], aromatic=True), i + 1
            else:
                atom, i = Atom(ATOMIC_NUMBER[c]), i + 1
            idx = len(atoms)
            atoms.append(atom)
            offsets.append(start)
            if prev is not None:
                if pending is not None:
                    order = pending[0]
                elif atom.aromatic and atoms[prev].aromatic:
                    order = BondOrder.AROMATIC
                else:
                    order = BondOrder.SINGLE
                add_bond(prev, idx, order, start)
            pending = None
            prev = idx
            last = "atom"
            continue

        if c in _BOND_SYMBOLS:
            if prev is None or pending is not None or last in ("dot",):
                raise InvalidSyntax(f"misplaced bond {c!r}", i, s)
            pending = (_BOND_SYMBOLS[c], i)
            last = "bond"
        elif c == "(":
            if prev is None or pending is not None or last == "dot":
                raise InvalidSyntax("branch without a preceding atom", i, s)
            branches.append((prev, i))
            last = "open"
        elif c == ")":
            if not branches:
                raise UnbalancedParenthesis("unmatched ')'", i, s)
            if last in ("open", "bond", "dot"):
                raise InvalidSyntax("empty or dangling branch", i, s)
            prev = branches.pop()[0]
            last = "close"
        elif c == ".":
            if prev is None or pending is not None or last in ("open", "dot"):
                raise InvalidSyntax("misplaced '.'", i, s)
            prev = None
            last = "dot"
        elif c in _DIGITS or c == "%":
            if c == "%":
                digits = s[i + 1:i + 3]
                if len(digits) != 2 or not all(d in _DIGITS for d in digits):
                    raise InvalidSyntax("'%' must be followed by two digits", i, s)
                num, i = int(digits), i + 2
            else:
                num = int(c)
            if prev is None or last not in ("atom", "ring", "bond"):
                raise InvalidSyntax("ring closure without a preceding atom", start, s)
            order = pending[0] if pending else None
            if num in rings:
                partner, opened_order, _ = rings.pop(num)
                if order is not None and opened_order is not None and order != opened_order:
                    raise InvalidSyntax(f"conflicting bond orders on ring {num}", start, s)
                order = order or opened_order
                if order is None:
                    both = atoms[partner].aromatic and atoms[prev].aromatic
                    order = BondOrder.AROMATIC if both else BondOrder.SINGLE
                add_bond(partner, prev, order, start)
            else:
                rings[num] = (prev, order, start)
            pending = None
            last = "ring"
        elif c in "/\\":
            raise UnsupportedFeature("directional bond", i, s)
        elif c == "@":
            raise UnsupportedFeature("stereo marker", i, s)
        elif c == "*":
            raise UnsupportedFeature("wildcard atom", i, s)
        elif c == "$":
            raise UnsupportedFeature("quadruple bond", i, s)
        elif c.isalpha():
            raise UnknownElement(f"unknown element {c!r}", i, s)
        else:
            raise InvalidSyntax(f"unexpected character {c!r}", i, s)
        i += 1

    if pending is not None:
        raise InvalidSyntax("dangling bond", pending[1], s)
    if last == "dot":
        raise InvalidSyntax("trailing '.'", n - 1, s)
    if branches:
        raise UnbalancedParenthesis("unclosed '('", branches[-1][1], s)
    if rings:
        first = min(off for _, _, off in rings.values())
        raise UnmatchedRingBond("ring bond opened but never closed", first, s)

    graph = MolGraph(
        mol_id=mol_id,
        atoms=tuple(atoms),
        bonds=tuple(bonds.values()),
        atom_offsets=tuple(offsets),
    )
    graph.hydrogens  # noqa: B018 - validates valences eagerly
    return graph
