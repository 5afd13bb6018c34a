"""Morgan-style circular fingerprints and Tanimoto similarity.

Environment hashes use 64-bit FNV-1a over little-endian 8-byte encodings of
integer fields, so fingerprints are bit-identical across platforms. The bits
will not match other toolkits' ECFP output; only the construction is the same.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import WidthMismatch
from .molgraph import MolGraph

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

DEFAULT_RADIUS = 2
DEFAULT_WIDTH = 2048


def fnv1a_64_bytes(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def encode_fields(fields: Iterable[int]) -> bytes:
    """Concatenate fields as 64-bit little-endian two's-complement words."""
    return b"".join((value & _MASK64).to_bytes(8, "little") for value in fields)


def fnv1a_64(fields: Iterable[int]) -> int:
    return fnv1a_64_bytes(encode_fields(fields))


def check_width(width: int) -> None:
    if not (64 <= width <= 65536) or width & (width - 1):
        raise ValueError(f"fingerprint width must be a power of two in [64, 65536], got {width}")


@dataclass(frozen=True)
class Fingerprint:
    """Fixed-width bit vector.

    ``bits`` packs the vector into an int with bit index 0 stored as the most
    significant of ``width`` bits, which makes the hex form a plain
    ``format(bits, 'x')``.
    """

    bits: int
    width: int = DEFAULT_WIDTH
    radius: int = DEFAULT_RADIUS
    mol_id: str = ""

    def __post_init__(self):
        check_width(self.width)
        if self.bits < 0 or self.bits >> self.width:
            raise ValueError("bits do not fit in the declared width")

    @classmethod
    def from_on_bits(cls, on_bits: Iterable[int], width: int = DEFAULT_WIDTH, **kw) -> Fingerprint:
        value = 0
        for i in on_bits:
            if not 0 <= i < width:
                raise ValueError(f"bit {i} out of range for width {width}")
            value |= 1 << (width - 1 - i)
        return cls(value, width, **kw)

    @classmethod
    def from_hex(cls, text: str, width: int, **kw) -> Fingerprint:
        if len(text) != width // 4:
            raise ValueError(f"expected {width // 4} hex characters, got {len(text)}")
        return cls(int(text, 16), width, **kw)

    def to_hex(self) -> str:
        return format(self.bits, f"0{self.width // 4}x")

    def on_bits(self) -> list[int]:
        w = self.width
        return sorted(w - 1 - i for i in range(w) if self.bits >> i & 1)

    def __len__(self):
        return self.bits.bit_count()


def atom_invariants(graph: MolGraph) -> list[int]:
    """Radius-0 invariant per atom.

    Hashes (atomic number, degree, total H, formal charge, aromatic, in ring).
    """
    return [
        fnv1a_64(
            (
                atom.element,
                degree,
                h,
                atom.formal_charge,
                int(atom.aromatic),
                int(ring),
            )
        )
        for atom, degree, h, ring in zip(
            graph.atoms, graph.degrees, graph.hydrogens, graph.ring_atoms
        )
    ]


def environment_hashes(graph: MolGraph, radius: int = DEFAULT_RADIUS) -> list[list[int]]:
    """Per-radius lists of atom environment hashes, ``result[r][atom]``."""
    return [layer for layer, _ in _layers(graph, radius)]


def _layers(graph: MolGraph, radius: int):
    """Yield (hashes, grown) per radius.

    ``grown[i]`` is false when atom i's environment covers no bond beyond
    its radius r-1 environment; such environments repeat an earlier
    substructure and set no bit of their own.
    """
    if radius < 0:
        raise ValueError("radius must be non-negative")
    adjacency = graph.adjacency
    bond_index = {}
    for k, bond in enumerate(graph.bonds):
        bond_index[bond.begin, bond.end] = bond_index[bond.end, bond.begin] = k
    current = atom_invariants(graph)
    covered = [0] * len(current)
    out = [(current, [True] * len(current))]
    for r in range(1, radius + 1):
        nxt, cov, grown = [], [], []
        for idx, nbrs in enumerate(adjacency):
            pairs = sorted((int(order), current[j]) for j, order in nbrs)
            fields = [r, current[idx]]
            for code, inv in pairs:
                fields.append(code)
                fields.append(inv)
            nxt.append(fnv1a_64(fields))
            mask = covered[idx]
            for j, _ in nbrs:
                mask |= covered[j] | 1 << bond_index[idx, j]
            cov.append(mask)
            grown.append(mask != covered[idx])
        current, covered = nxt, cov
        out.append((current, grown))
    return out


def morgan_fingerprint(
    graph: MolGraph, radius: int = DEFAULT_RADIUS, width: int = DEFAULT_WIDTH
) -> Fingerprint:
    check_width(width)
    on = {
        h % width
        for layer, grown in _layers(graph, radius)
        for h, g in zip(layer, grown)
        if g
    }
    return Fingerprint.from_on_bits(on, width, radius=radius, mol_id=graph.mol_id)


def _counts(a: Fingerprint, b: Fingerprint) -> tuple[int, int]:
    if a.width != b.width:
        raise WidthMismatch(f"fingerprint widths differ: {a.width} vs {b.width}")
    return (a.bits & b.bits).bit_count(), (a.bits | b.bits).bit_count()


def tanimoto_similarity(a: Fingerprint, b: Fingerprint) -> float:
    both, either = _counts(a, b)
    return 1.0 if either == 0 else both / either


def tanimoto_distance(a: Fingerprint, b: Fingerprint) -> float:
    both, either = _counts(a, b)
    return 0.0 if either == 0 else (either - both) / either


def tanimoto_distance_exact(a: Fingerprint, b: Fingerprint) -> Fraction:
    both, either = _counts(a, b)
    return Fraction(0) if either == 0 else Fraction(either - both, either)


def tanimoto_distances(anchor: Fingerprint, others: Sequence[Fingerprint]) -> list[float]:
    return [tanimoto_distance(anchor, fp) for fp in others]
