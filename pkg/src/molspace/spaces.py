"""Distance functions over docking scores, atom embeddings and atom features.

Each data source is wrapped in a small "space" object exposing
``molecules`` and ``distances_from(anchor, others)`` so the ranking code can
treat them uniformly. Scalar distance functions go through the same
vectorised code as the sweeps, so a pair distance is bit-identical to the
corresponding entry of an anchor sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    ElementNotInVocabulary,
    EmptyMatrix,
    NoCommonTargets,
    UnknownMolecule,
)
from .fingerprint import Fingerprint, tanimoto_distance
from .molgraph import MolGraph


# -- docking ----------------------------------------------------------------

class DockingDistance(NamedTuple):
    value: float
    n_targets: int


@dataclass(frozen=True, eq=False)
class DockingMatrix:
    """Sparse molecule x target score table (NaN marks a missing score).

    Molecules and targets are kept in sorted order so every reduction runs
    over a fixed target order, independent of how the input was listed.
    Per-target ranges are taken over the molecules that have a score for
    that target. Targets with fewer than two scores, or with max == min, are
    degenerate and never contribute to a distance.
    """

    molecules: tuple[str, ...]
    targets: tuple[str, ...]
    scores: np.ndarray
    index: dict = field(init=False, repr=False)
    present: np.ndarray = field(init=False, repr=False)
    minimum: np.ndarray = field(init=False, repr=False)
    maximum: np.ndarray = field(init=False, repr=False)
    degenerate: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64)
        if scores.shape != (len(self.molecules), len(self.targets)):
            raise ValueError("score table shape does not match molecule/target lists")
        if np.isinf(scores).any():
            raise ValueError("docking scores must be finite")
        if len(set(self.molecules)) != len(self.molecules):
            raise ValueError("duplicate molecule ids")
        if list(self.molecules) != sorted(self.molecules) or list(self.targets) != sorted(self.targets):
            raise ValueError("molecules and targets must be sorted; use DockingMatrix.from_records")
        scores.setflags(write=False)
        present = ~np.isnan(scores)
        count = present.sum(axis=0)
        with np.errstate(all="ignore"):
            lo = np.where(count > 0, np.nanmin(np.where(present, scores, np.inf), axis=0), np.nan)
            hi = np.where(count > 0, np.nanmax(np.where(present, scores, -np.inf), axis=0), np.nan)
        degenerate = (count < 2) | ~(hi > lo)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "index", {m: i for i, m in enumerate(self.molecules)})
        object.__setattr__(self, "present", present)
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)
        object.__setattr__(self, "degenerate", degenerate)

    @classmethod
    def from_records(cls, records: Iterable[tuple[str, str, float]]) -> DockingMatrix:
        triples = list(records)
        mols = sorted({m for m, _, _ in triples})
        tgts = sorted({t for _, t, _ in triples})
        mi = {m: i for i, m in enumerate(mols)}
        ti = {t: i for i, t in enumerate(tgts)}
        table = np.full((len(mols), len(tgts)), np.nan)
        for m, t, s in triples:
            s = float(s)
            if not math.isfinite(s):
                raise ValueError(f"non-finite score for ({m}, {t})")
            if not np.isnan(table[mi[m], ti[t]]):
                raise ValueError(f"duplicate score for ({m}, {t})")
            table[mi[m], ti[t]] = s
        return cls(tuple(mols), tuple(tgts), table)

    def records(self) -> list[tuple[str, str, float]]:
        rows, cols = np.nonzero(self.present)
        return [
            (self.molecules[r], self.targets[c], float(self.scores[r, c]))
            for r, c in zip(rows, cols)
        ]

    @property
    def ranges(self) -> np.ndarray:
        return self.maximum - self.minimum

    def row(self, mol_id: str) -> int:
        try:
            return self.index[mol_id]
        except KeyError:
            raise UnknownMolecule(f"molecule {mol_id!r} has no docking scores") from None

    def sweep(self, anchor: str, others: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        """Range-normalised difference sums from ``anchor`` to each of ``others`` plus contributing-target counts."""
        a = self.row(anchor)
        rows = np.fromiter((self.row(m) for m in others), dtype=np.intp, count=len(others))
        usable = self.present[rows] & self.present[a] & ~self.degenerate
        with np.errstate(all="ignore"):
            terms = np.abs(self.scores[rows] - self.scores[a]) / self.ranges
        terms = np.where(usable, terms, 0.0)
        return terms.sum(axis=1), usable.sum(axis=1)


def docking_distance(
    m1: str, m2: str, matrix: DockingMatrix, per_target_mean: bool = False
) -> DockingDistance:
    """Range-normalised absolute score difference summed over shared targets.

    Only targets scored for both molecules (and not degenerate) contribute;
    their count is returned alongside the value.
    """
    values, counts = matrix.sweep(m1, [m2])
    count = int(counts[0])
    if count == 0:
        raise NoCommonTargets(f"{m1!r} and {m2!r} share no scored targets")
    value = float(values[0])
    if per_target_mean:
        value /= count
    return DockingDistance(value, count)


# -- embeddings -------------------------------------------------------------

def pool_max(matrix) -> np.ndarray:
    """Column-wise maximum over atoms."""
    v = np.asarray(matrix, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] == 0:
        raise EmptyMatrix(f"expected a non-empty atoms x d matrix, got shape {v.shape}")
    return v.max(axis=0)


def _l2_rows(block: np.ndarray, ref: np.ndarray) -> np.ndarray:
    diff = block - ref
    return np.sqrt((diff * diff).sum(axis=1))


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """Per-molecule embeddings, each an atoms x d matrix or a pooled d-vector.

    Pooling happens once at construction; ``pooled`` holds one row per
    molecule in sorted id order.
    """

    entries: Mapping[str, np.ndarray]
    molecules: tuple[str, ...] = field(init=False)
    pooled: np.ndarray = field(init=False, repr=False)
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        mols = tuple(sorted(self.entries))
        rows = []
        dim = None
        for m in mols:
            v = np.asarray(self.entries[m], dtype=np.float64)
            if v.ndim == 2:
                if v.shape[0] < 1:
                    raise EmptyMatrix(f"molecule {m!r} has no atom embeddings")
                p = pool_max(v)
            elif v.ndim == 1:
                p = v
            else:
                raise ValueError(f"embedding for {m!r} must be 1-D or 2-D")
            if not np.isfinite(v).all():
                raise ValueError(f"embedding for {m!r} contains non-finite values")
            if dim is None:
                dim = p.shape[0]
            elif p.shape[0] != dim:
                raise DimensionMismatch(f"molecule {m!r} has dimension {p.shape[0]}, expected {dim}")
            rows.append(p)
        pooled = np.vstack(rows) if rows else np.empty((0, 0))
        pooled.setflags(write=False)
        object.__setattr__(self, "molecules", mols)
        object.__setattr__(self, "pooled", pooled)
        object.__setattr__(self, "index", {m: i for i, m in enumerate(mols)})

    @property
    def dim(self) -> int:
        return self.pooled.shape[1]

    def __len__(self):
        return len(self.molecules)

    def __contains__(self, mol_id):
        return mol_id in self.index

    def row(self, mol_id: str) -> int:
        try:
            return self.index[mol_id]
        except KeyError:
            raise UnknownMolecule(f"molecule {mol_id!r} has no embedding") from None

    def sweep(self, anchor: str, others: Sequence[str]) -> np.ndarray:
        rows = [self.row(m) for m in others]
        return _l2_rows(self.pooled[rows], self.pooled[self.row(anchor)])


def embedding_distance(m1: str, m2: str, embeddings: EmbeddingSet) -> float:
    """L2 norm of the difference of max-pooled embeddings."""
    return float(embeddings.sweep(m1, [m2])[0])


# -- initial atom features --------------------------------------------------

DEFAULT_VOCABULARY = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")


@dataclass(frozen=True)
class FeatureConfig:
    vocabulary: tuple[str, ...] = DEFAULT_VOCABULARY
    degree: bool = True
    hydrogens: bool = True
    charge: bool = True
    aromatic: bool = True

    def __post_init__(self):
        object.__setattr__(self, "vocabulary", tuple(self.vocabulary))
        if not self.vocabulary:
            raise ValueError("feature vocabulary must not be empty")
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise ValueError("feature vocabulary has duplicates")

    @property
    def width(self) -> int:
        return len(self.vocabulary) + self.degree + self.hydrogens + self.charge + self.aromatic


def featurize(graph: MolGraph, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Atoms x d matrix: one-hot element, then degree, H count, charge, aromatic."""
    slot = {sym: i for i, sym in enumerate(cfg.vocabulary)}
    k = len(cfg.vocabulary)
    out = np.zeros((len(graph.atoms), cfg.width))
    for i, (atom, degree, h) in enumerate(zip(graph.atoms, graph.degrees, graph.hydrogens)):
        try:
            out[i, slot[atom.symbol]] = 1.0
        except KeyError:
            raise ElementNotInVocabulary(
                f"{graph.mol_id or 'molecule'}: element {atom.symbol} not in vocabulary"
            ) from None
        col = k
        for enabled, value in (
            (cfg.degree, degree),
            (cfg.hydrogens, h),
            (cfg.charge, atom.formal_charge),
            (cfg.aromatic, atom.aromatic),
        ):
            if enabled:
                out[i, col] = float(value)
                col += 1
    return out


def feature_embeddings(graphs: Mapping[str, MolGraph], cfg: FeatureConfig = FeatureConfig()) -> EmbeddingSet:
    return EmbeddingSet({m: featurize(g, cfg) for m, g in graphs.items()})


def feature_distance(
    m1: str, m2: str, graphs: Mapping[str, MolGraph], cfg: FeatureConfig = FeatureConfig()
) -> float:
    try:
        pair = {m: graphs[m] for m in (m1, m2)}
    except KeyError as exc:
        raise UnknownMolecule(f"molecule {exc.args[0]!r} has no structure") from None
    return embedding_distance(m1, m2, feature_embeddings(pair, cfg))


# -- uniform space wrappers -------------------------------------------------

class DockingSpace:
    name = "docking"

    def __init__(self, matrix: DockingMatrix, per_target_mean: bool = False, min_shared_targets: int = 1):
        if min_shared_targets < 1:
            raise ValueError("min_shared_targets must be at least 1")
        self.matrix = matrix
        self.per_target_mean = per_target_mean
        self.min_shared_targets = min_shared_targets

    @property
    def molecules(self) -> frozenset[str]:
        return frozenset(self.matrix.molecules)

    def distances_from(self, anchor: str, others: Sequence[str]) -> np.ndarray:
        values, counts = self.matrix.sweep(anchor, others)
        short = np.flatnonzero(counts < self.min_shared_targets)
        if short.size:
            m = others[short[0]]
            raise NoCommonTargets(
                f"{anchor!r} and {m!r} share {int(counts[short[0]])} scored targets "
                f"(minimum {self.min_shared_targets})"
            )
        if self.per_target_mean:
            values = values / counts
        return values


class EmbeddingSpace:
    def __init__(self, embeddings: EmbeddingSet, name: str = "embedding"):
        self.embeddings = embeddings
        self.name = name

    @property
    def molecules(self) -> frozenset[str]:
        return frozenset(self.embeddings.molecules)

    def distances_from(self, anchor: str, others: Sequence[str]) -> np.ndarray:
        return self.embeddings.sweep(anchor, others)


class FingerprintSpace:
    name = "fingerprint"

    def __init__(self, fingerprints: Mapping[str, Fingerprint]):
        self.fingerprints = dict(fingerprints)

    @property
    def molecules(self) -> frozenset[str]:
        return frozenset(self.fingerprints)

    def _get(self, mol_id):
        try:
            return self.fingerprints[mol_id]
        except KeyError:
            raise UnknownMolecule(f"molecule {mol_id!r} has no fingerprint") from None

    def distances_from(self, anchor: str, others: Sequence[str]) -> np.ndarray:
        ref = self._get(anchor)
        return np.array([tanimoto_distance(ref, self._get(m)) for m in others], dtype=np.float64)
