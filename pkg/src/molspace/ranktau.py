"""Anchor orderings and Kendall-Tau rank distance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AnchorMismatch,
    EmptyUniverse,
    UniverseMismatch,
    UnknownAnchor,
    UnknownMolecule,
)

SPACES = ("docking", "embedding", "feature", "fingerprint", "random")


@dataclass(frozen=True)
class Ordering:
    """Molecules ranked by ascending distance to ``anchor`` (anchor excluded).

    Ties in distance are broken by ascending molecule id.
    """

    anchor: str
    space: str
    ranked: tuple[str, ...]
    distances: tuple[float, ...]

    def __post_init__(self):
        if len(self.ranked) != len(self.distances):
            raise ValueError("ranked and distances must have equal length")
        if self.anchor in self.ranked:
            raise ValueError("the anchor must not appear in its own ordering")
        if len(set(self.ranked)) != len(self.ranked):
            raise ValueError("ordering contains duplicate molecules")
        for i in range(1, len(self.ranked)):
            d0, d1 = self.distances[i - 1], self.distances[i]
            if d1 < d0 or (d1 == d0 and self.ranked[i] < self.ranked[i - 1]):
                raise ValueError(f"ordering is not sorted by (distance, id) at position {i}")

    def __len__(self):
        return len(self.ranked)


@dataclass(frozen=True)
class TauResult:
    swaps: int
    pairs: int

    @property
    def normalized(self) -> float:
        return self.swaps / self.pairs if self.pairs else 0.0


def order_by_distance(anchor: str, space: str, ids: Sequence[str], distances) -> Ordering:
    """Sort ``ids`` by (distance, id). ``ids`` need not be pre-sorted."""
    d = np.asarray(distances, dtype=np.float64)
    if d.shape != (len(ids),):
        raise ValueError("one distance per molecule required")
    perm = sorted(range(len(ids)), key=lambda i: (d[i], ids[i]))
    return Ordering(
        anchor=anchor,
        space=space,
        ranked=tuple(ids[i] for i in perm),
        distances=tuple(float(d[i]) for i in perm),
    )


def rank_by_anchor(anchor: str, space, universe: Iterable[str]) -> Ordering:
    """Rank every molecule of ``universe`` except ``anchor`` by distance to it.

    ``space`` is any object with a ``name`` and
    ``distances_from(anchor, others)`` (see :mod:`molspace.spaces`).
    """
    members = sorted(set(universe))
    if anchor not in members:
        raise UnknownAnchor(f"anchor {anchor!r} is not in the universe")
    others = [m for m in members if m != anchor]
    if not others:
        raise EmptyUniverse("no molecules to rank besides the anchor")
    try:
        d = np.asarray(space.distances_from(anchor, others), dtype=np.float64)
    except UnknownMolecule as exc:
        if anchor not in space.molecules:
            raise UnknownAnchor(f"anchor {anchor!r} is missing from the {space.name} space") from exc
        raise
    # members are sorted, so a stable sort on distance alone gives (distance, id)
    perm = np.argsort(d, kind="stable")
    return Ordering(
        anchor=anchor,
        space=space.name,
        ranked=tuple(others[i] for i in perm),
        distances=tuple(float(x) for x in d[perm]),
    )


def count_inversions(seq: Sequence[int]) -> int:
    """Number of pairs i < j with seq[i] > seq[j], by bottom-up merge sort.

    Works on a private copy; the argument is left untouched.
    """
    src = list(seq)
    n = len(src)
    dst = [0] * n
    total = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    dst[k] = src[j]
                    total += mid - i
                    j += 1
                else:
                    dst[k] = src[i]
                    i += 1
                k += 1
            if i < mid:
                dst[k:hi] = src[i:mid]
            elif j < hi:
                dst[k:hi] = src[j:hi]
        src, dst = dst, src
        width *= 2
    return total


def _check_pair(a: Ordering, b: Ordering) -> None:
    if a.anchor != b.anchor:
        raise AnchorMismatch(f"orderings use different anchors: {a.anchor!r} vs {b.anchor!r}")
    if len(a.ranked) != len(b.ranked) or set(a.ranked) != set(b.ranked):
        raise UniverseMismatch("orderings rank different sets of molecules")


def kendall_tau(a: Ordering, b: Ordering) -> TauResult:
    """Number of molecule pairs ordered differently by ``a`` and ``b``."""
    _check_pair(a, b)
    return kendall_tau_ranked(a.ranked, b.ranked)


def kendall_tau_ranked(a: Sequence, b: Sequence) -> TauResult:
    """Kendall-Tau distance between two permutations of the same items."""
    position = {item: i for i, item in enumerate(a)}
    if len(position) != len(a) or len(a) != len(b):
        raise UniverseMismatch("sequences are not permutations of the same items")
    try:
        relabeled = [position[item] for item in b]
    except KeyError as exc:
        raise UniverseMismatch(f"item {exc.args[0]!r} missing from the first sequence") from None
    n = len(a)
    return TauResult(swaps=count_inversions(relabeled), pairs=n * (n - 1) // 2)
