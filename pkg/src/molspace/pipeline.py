"""Concordance analysis between docking space and the other molecular spaces.

Randomness comes from numpy's PCG64 bit generator. Anchor sampling uses
``PCG64(seed)`` directly; every other stream is derived from
``SeedSequence([seed, stream, index])`` so results do not depend on the
order in which anchors are processed or on the number of worker threads.
"""

from __future__ import annotations

import logging
import math
from statistics import NormalDist
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import (
    KTooLarge,
    MolSpaceError,
    SampleTooLarge,
    UniverseTooSmall,
    UnknownMolecule,
)
from .fingerprint import DEFAULT_RADIUS, DEFAULT_WIDTH, Fingerprint, morgan_fingerprint
from .molgraph import MolGraph
from .ranktau import Ordering, TauResult, kendall_tau, rank_by_anchor
from .spaces import (
    DockingMatrix,
    DockingSpace,
    EmbeddingSet,
    EmbeddingSpace,
    FeatureConfig,
    FingerprintSpace,
    feature_embeddings,
)

log = logging.getLogger(__name__)

COMPARABLE_SPACES = ("embedding", "feature", "fingerprint", "random")

# stream tags for SeedSequence-derived generators
_RANDOM_SPACE = 1
_BACKGROUND = 2


def _generator(seed: int, *spawn_key: int) -> np.random.Generator:
    if spawn_key:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *spawn_key])))
    return np.random.Generator(np.random.PCG64(seed))


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return seed


def _partial_shuffle(items: list, k: int, rng: np.random.Generator) -> list:
    # first k steps of Fisher-Yates
    items = list(items)
    n = len(items)
    for i in range(k):
        j = int(rng.integers(i, n))
        items[i], items[j] = items[j], items[i]
    return items[:k]


def sample_anchors(universe: Iterable[str], k: int, seed: int) -> list[str]:
    """Draw ``k`` distinct ids uniformly without replacement.

    The universe is sorted first, so the result depends only on its contents.
    """
    pool = sorted(set(universe))
    if not 0 <= k <= len(pool):
        raise KTooLarge(f"cannot sample {k} anchors from {len(pool)} molecules")
    return _partial_shuffle(pool, k, _generator(_check_seed(seed)))


def random_ordering(anchor: str, universe: Iterable[str], rng: np.random.Generator) -> Ordering:
    """A uniformly random ordering of ``universe`` minus ``anchor``."""
    others = sorted(m for m in set(universe) if m != anchor)
    perm = rng.permutation(len(others))
    return Ordering(
        anchor=anchor,
        space="random",
        ranked=tuple(others[i] for i in perm),
        distances=tuple(float(i) for i in range(len(others))),
    )


# -- inputs and configuration -----------------------------------------------

@dataclass(frozen=True)
class AnalysisConfig:
    anchor_count: int = 100
    seed: int = 0
    spaces: tuple[str, ...] = ("embedding", "random")
    min_shared_targets: int = 1
    per_target_mean: bool = False
    reference_space: str = field(default="docking", init=False)

    def __post_init__(self):
        object.__setattr__(self, "spaces", tuple(self.spaces))
        if self.anchor_count < 1:
            raise ValueError("anchor_count must be positive")
        if not self.spaces:
            raise ValueError("at least one space must be compared")
        unknown = [s for s in self.spaces if s not in COMPARABLE_SPACES]
        if unknown:
            raise ValueError(f"unknown spaces {unknown}; choose from {COMPARABLE_SPACES}")
        if len(set(self.spaces)) != len(self.spaces):
            raise ValueError("spaces must not repeat")
        if self.min_shared_targets < 1:
            raise ValueError("min_shared_targets must be at least 1")
        _check_seed(self.seed)


@dataclass
class AnalysisData:
    """Loaded inputs. Only the sources needed by the requested spaces are required."""

    docking: DockingMatrix
    embeddings: EmbeddingSet | None = None
    graphs: Mapping[str, MolGraph] | None = None
    fingerprints: Mapping[str, Fingerprint] | None = None
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)
    fp_radius: int = DEFAULT_RADIUS
    fp_width: int = DEFAULT_WIDTH
    provenance: dict = field(default_factory=dict)

    def space(self, name: str, *, per_target_mean: bool = False, min_shared_targets: int = 1):
        """Build the distance space called ``name`` from the loaded data."""
        if name == "docking":
            return DockingSpace(self.docking, per_target_mean, min_shared_targets)
        if name == "embedding":
            if self.embeddings is None:
                raise ValueError("embedding space requested but no embeddings were loaded")
            return EmbeddingSpace(self.embeddings, "embedding")
        if name == "feature":
            if self.graphs is None:
                raise ValueError("feature space requested but no SMILES were loaded")
            return EmbeddingSpace(feature_embeddings(self.graphs, self.feature_config), "feature")
        if name == "fingerprint":
            if self.fingerprints is not None:
                return FingerprintSpace(self.fingerprints)
            if self.graphs is None:
                raise ValueError("fingerprint space requested but neither fingerprints nor SMILES were loaded")
            return FingerprintSpace(
                {m: morgan_fingerprint(g, self.fp_radius, self.fp_width) for m, g in self.graphs.items()}
            )
        raise ValueError(f"unknown space {name!r}")


# -- report -----------------------------------------------------------------

@dataclass
class AnchorResult:
    anchor_id: str
    swaps: int
    pairs: int
    normalized: float


@dataclass
class SpaceSummary:
    name: str
    mean_swaps: float | None
    mean_normalized: float | None
    n_anchors: int
    anchors: list[AnchorResult]

    @classmethod
    def from_results(cls, name: str, results: list[AnchorResult]) -> SpaceSummary:
        n = len(results)
        if n == 0:
            return cls(name, None, None, 0, [])
        return cls(
            name=name,
            mean_swaps=sum(r.swaps for r in results) / n,
            mean_normalized=math.fsum(r.normalized for r in results) / n,
            n_anchors=n,
            anchors=results,
        )


@dataclass
class ConcordanceReport:
    config: dict
    universe_size: int
    spaces: list[SpaceSummary]
    failures: list[dict]
    metadata: dict

    def space(self, name: str) -> SpaceSummary:
        for s in self.spaces:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "universe_size": self.universe_size,
            "spaces": [asdict(s) for s in self.spaces],
            "failures": self.failures,
            "metadata": self.metadata,
        }

    def format_table(self) -> str:
        rows = [("Molecular Space", "Number of Swaps", "Normalized Kendall Tau")]
        rows.append(("docking (reference)", "0", "0"))
        for s in self.spaces:
            if s.n_anchors:
                rows.append((s.name, f"{s.mean_swaps:.6g}", f"{s.mean_normalized:.4f}"))
            else:
                rows.append((s.name, "n/a", "n/a"))
        widths = [max(len(r[i]) for r in rows) for i in range(3)]
        lines = [" | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        lines.insert(1, "-+-".join("-" * w for w in widths))
        anchors = self.config["anchor_count"]
        lines.append("")
        lines.append(
            f"universe: {self.universe_size} molecules; anchors: {anchors} requested; "
            f"failed anchor/space pairs: {len(self.failures)}"
        )
        return "\n".join(lines)


# -- concordance ------------------------------------------------------------

def analysis_universe(data: AnalysisData, spaces: Mapping[str, object]) -> list[str]:
    members = set(data.docking.molecules)
    for name, space in spaces.items():
        if name != "random":
            members &= space.molecules
    return sorted(members)


def _failure(anchor: str, space: str, exc: Exception) -> dict:
    return {"anchor_id": anchor, "space": space, "error": type(exc).__name__, "reason": str(exc)}


def run_concordance(
    cfg: AnalysisConfig,
    data: AnalysisData,
    threads: int = 1,
    progress: Callable[[int, int], None] | None = None,
) -> ConcordanceReport:
    """Average per-anchor Kendall-Tau distance of each space to the docking space."""
    reference = data.space(
        "docking", per_target_mean=cfg.per_target_mean, min_shared_targets=cfg.min_shared_targets
    )
    spaces = {name: (None if name == "random" else data.space(name)) for name in cfg.spaces}
    universe = analysis_universe(data, {k: v for k, v in spaces.items() if v is not None})
    if len(universe) < 3:
        raise UniverseTooSmall(f"only {len(universe)} molecules are present in every requested space")
    anchors = sample_anchors(universe, cfg.anchor_count, cfg.seed)
    log.info("universe of %d molecules, %d anchors", len(universe), len(anchors))

    def work(item):
        idx, anchor = item
        results: dict[str, TauResult] = {}
        failures = []
        try:
            ref = rank_by_anchor(anchor, reference, universe)
        except MolSpaceError as exc:
            return results, [_failure(anchor, "docking", exc)]
        for name, space in spaces.items():
            try:
                if space is None:
                    ordering = random_ordering(anchor, universe, _generator(cfg.seed, _RANDOM_SPACE, idx))
                else:
                    ordering = rank_by_anchor(anchor, space, universe)
                results[name] = kendall_tau(ordering, ref)
            except MolSpaceError as exc:
                failures.append(_failure(anchor, name, exc))
        return results, failures

    done = 0
    outcomes = []
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for outcome in pool.map(work, enumerate(anchors)):
            outcomes.append(outcome)
            done += 1
            if progress is not None:
                progress(done, len(anchors))

    per_space: dict[str, list[AnchorResult]] = {name: [] for name in cfg.spaces}
    failures: list[dict] = []
    for anchor, (results, fails) in zip(anchors, outcomes):
        failures.extend(fails)
        for name, tau in results.items():
            per_space[name].append(AnchorResult(anchor, tau.swaps, tau.pairs, tau.normalized))

    metadata = {
        "reference_space": "docking",
        "docking_aggregation": "per-target-mean" if cfg.per_target_mean else "sum",
        "docking_range_policy": "per-target min/max over molecules scored for that target",
        "missing_score_policy": "a target contributes only when both molecules are scored",
        "tie_break": "ascending distance, then ascending molecule id",
        "kendall_tau_normalization": "swaps / (n*(n-1)/2)",
        "random_space": "fresh uniform permutation per anchor",
        "rng": "numpy PCG64",
        "effective_anchors": {name: len(res) for name, res in per_space.items()},
    }
    if "fingerprint" in cfg.spaces:
        if data.fingerprints is None:
            metadata["fingerprint"] = {"radius": data.fp_radius, "width": data.fp_width}
        else:
            metadata["fingerprint"] = "precomputed"
    if "feature" in cfg.spaces:
        metadata["feature_config"] = asdict(data.feature_config)
    metadata.update(data.provenance)

    config = {
        "anchor_count": cfg.anchor_count,
        "seed": cfg.seed,
        "spaces": list(cfg.spaces),
        "reference_space": cfg.reference_space,
        "min_shared_targets": cfg.min_shared_targets,
        "per_target_mean": cfg.per_target_mean,
    }
    return ConcordanceReport(
        config=config,
        universe_size=len(universe),
        spaces=[SpaceSummary.from_results(name, per_space[name]) for name in cfg.spaces],
        failures=failures,
        metadata=metadata,
    )


# -- cross-rank percentile --------------------------------------------------

@dataclass(frozen=True)
class PercentileResult:
    index_of_m2_from_m1: int
    index_of_m1_from_m2: int
    list_length: int

    @property
    def mean_index(self) -> float:
        return (self.index_of_m2_from_m1 + self.index_of_m1_from_m2) / 2

    @property
    def percentile(self) -> float:
        return percentile_from_indices(
            self.index_of_m2_from_m1, self.index_of_m1_from_m2, self.list_length
        )


def percentile_from_indices(i: int, j: int, list_length: int) -> float:
    """Mean of two 0-based list positions as a percentage of the list length."""
    if list_length < 1:
        raise ValueError("list_length must be positive")
    return (i + j) / 2 / list_length * 100


def cross_rank_percentile(
    m1: str,
    m2: str,
    space,
    sample_size: int,
    seed: int,
    universe: Iterable[str] | None = None,
) -> PercentileResult:
    """How far apart two molecules sit in each other's ranked neighbour lists.

    ``sample_size`` background molecules are drawn from the universe without
    ``m1`` and ``m2``; the two probes are then added back, each probe ranks
    the other ``sample_size + 1`` molecules, and the two 0-based positions
    of the partner are averaged.
    """
    if m1 == m2:
        raise ValueError("the two molecules must differ")
    members = set(space.molecules if universe is None else universe)
    for m in (m1, m2):
        if m not in members:
            raise UnknownMolecule(f"molecule {m!r} is not in the {space.name} space")
    pool = sorted(members - {m1, m2})
    if sample_size < 0 or sample_size > len(pool):
        raise SampleTooLarge(
            f"sample of {sample_size} needs {sample_size + 2} molecules, universe has {len(members)}"
        )
    background = _partial_shuffle(pool, sample_size, _generator(_check_seed(seed), _BACKGROUND))
    sub = background + [m1, m2]
    from_m1 = rank_by_anchor(m1, space, sub)
    from_m2 = rank_by_anchor(m2, space, sub)
    return PercentileResult(
        index_of_m2_from_m1=from_m1.ranked.index(m2),
        index_of_m1_from_m2=from_m2.ranked.index(m1),
        list_length=sample_size + 1,
    )


# -- synthetic data ---------------------------------------------------------

@dataclass
class SynthData:
    molecules: tuple[str, ...]
    latent: np.ndarray
    docking: DockingMatrix
    coherent: EmbeddingSet
    random: EmbeddingSet
    fingerprints: dict[str, Fingerprint]
    params: dict


def synth_generate(
    n_molecules: int,
    n_targets: int,
    dim: int,
    noise: float,
    seed: int,
    missing_fraction: float = 0.05,
    fp_width: int = DEFAULT_WIDTH,
    fp_noise: float = 1.0,
    fp_density: float = 0.05,
) -> SynthData:
    """Generate a docking table, embeddings and fingerprints from one latent space.

    Each molecule gets a standard-normal latent vector ``z``. Target ``t``
    scores it as ``base_t + scale_t * (w_t . z + noise * e)`` with a unit
    direction ``w_t``, so more negative is better as with real docking
    scores. Coherent embeddings are ``z`` plus independent Gaussian noise of
    the same ``noise``; random embeddings are fresh Gaussians. Fingerprint
    surrogates threshold random hyperplane projections of ``z`` (with
    ``fp_noise`` added) at the ``1 - fp_density`` normal quantile. About
    ``missing_fraction`` of the scores are dropped, keeping at least one per
    molecule and two per target.
    """
    if n_molecules < 3:
        raise ValueError("need at least 3 molecules")
    if n_targets < 1 or dim < 1:
        raise ValueError("need at least one target and one latent dimension")
    if noise < 0 or fp_noise < 0:
        raise ValueError("noise must be non-negative")
    if not 0 <= missing_fraction < 1:
        raise ValueError("missing_fraction must be in [0, 1)")
    if not 0 < fp_density < 1:
        raise ValueError("fp_density must be in (0, 1)")
    seed = _check_seed(seed)
    streams = [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(8)]
    g_latent, g_targets, g_score, g_emb, g_rand, g_missing, g_fp, g_fpnoise = streams

    width = len(str(n_molecules))
    ids = tuple(f"M{i:0{width}d}" for i in range(1, n_molecules + 1))
    targets = tuple(f"T{i:0{len(str(n_targets))}d}" for i in range(1, n_targets + 1))

    z = g_latent.standard_normal((n_molecules, dim))
    w = g_targets.standard_normal((n_targets, dim))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    base = g_targets.uniform(-9.0, -6.0, n_targets)
    scale = g_targets.uniform(0.5, 2.0, n_targets)
    proj = z @ w.T + noise * g_score.standard_normal((n_molecules, n_targets))
    scores = base + scale * proj

    drop = g_missing.random((n_molecules, n_targets)) < missing_fraction
    for i in np.flatnonzero(drop.all(axis=1)):
        drop[i, g_missing.integers(n_targets)] = False
    for t in np.flatnonzero((~drop).sum(axis=0) < 2):
        keep = g_missing.choice(n_molecules, size=2, replace=False)
        drop[keep, t] = False
    scores[drop] = np.nan

    coherent = z + noise * g_emb.standard_normal(z.shape)
    rand = g_rand.standard_normal(z.shape)

    planes = g_fp.standard_normal((fp_width, dim))
    planes /= np.linalg.norm(planes, axis=1, keepdims=True)
    # w . (z + e) with unit w has variance 1 + fp_noise^2
    noisy = z + fp_noise * g_fpnoise.standard_normal(z.shape)
    proj_fp = noisy @ planes.T
    cut = NormalDist().inv_cdf(1 - fp_density) * math.sqrt(1 + fp_noise**2)
    fps = {}
    for i, m in enumerate(ids):
        on = np.flatnonzero(proj_fp[i] > cut)
        if on.size == 0:
            on = [int(np.argmax(proj_fp[i]))]
        fps[m] = Fingerprint.from_on_bits((int(b) for b in on), fp_width, radius=0, mol_id=m)

    return SynthData(
        molecules=ids,
        latent=z,
        docking=DockingMatrix(ids, targets, scores),
        coherent=EmbeddingSet(dict(zip(ids, coherent))),
        random=EmbeddingSet(dict(zip(ids, rand))),
        fingerprints=fps,
        params={
            "molecules": n_molecules,
            "targets": n_targets,
            "dim": dim,
            "noise": noise,
            "seed": seed,
            "missing_fraction": missing_fraction,
            "fp_width": fp_width,
            "fp_noise": fp_noise,
            "fp_density": fp_density,
        },
    )


def coherence_ranking(report: ConcordanceReport) -> list[str]:
    """Space names from most to least docking-like by mean normalized KT."""
    scored = [s for s in report.spaces if s.n_anchors]
    return [s.name for s in sorted(scored, key=lambda s: s.mean_normalized)]


def anchor_wins(report_a: SpaceSummary, report_b: SpaceSummary) -> int:
    """Anchors where space ``a`` has strictly lower normalized KT than ``b``."""
    b = {r.anchor_id: r.normalized for r in report_b.anchors}
    return sum(1 for r in report_a.anchors if r.anchor_id in b and r.normalized < b[r.anchor_id])

