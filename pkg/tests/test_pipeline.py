import math

import numpy as np
import pytest

from molspace.errors import KTooLarge, SampleTooLarge, UniverseTooSmall, UnknownMolecule
from molspace.molgraph import parse_smiles
from molspace.pipeline import (
    AnalysisConfig,
    AnalysisData,
    anchor_wins,
    coherence_ranking,
    cross_rank_percentile,
    percentile_from_indices,
    run_concordance,
    sample_anchors,
    synth_generate,
)
from molspace.spaces import DockingMatrix, EmbeddingSet, EmbeddingSpace

UNIVERSE = [f"m{i:04d}" for i in range(1000)]


@pytest.fixture(scope="module")
def synth():
    return synth_generate(300, 20, 8, 0.1, seed=11)


def test_sample_whole_universe():
    got = sample_anchors(UNIVERSE[:50], 50, seed=3)
    assert sorted(got) == UNIVERSE[:50]
    assert got != UNIVERSE[:50]


def test_sample_is_deterministic_and_order_free():
    a = sample_anchors(UNIVERSE, 100, seed=42)
    assert a == sample_anchors(list(reversed(UNIVERSE)), 100, seed=42)
    assert len(set(a)) == 100


def test_sample_too_large():
    with pytest.raises(KTooLarge):
        sample_anchors(UNIVERSE[:5], 6, seed=0)


def test_overlap_between_seeds_is_hypergeometric():
    # expected overlap 100*100/1000 = 10, variance ~8.1; average over 200 seed pairs
    overlaps = [
        len(set(sample_anchors(UNIVERSE, 100, 2 * s)) & set(sample_anchors(UNIVERSE, 100, 2 * s + 1)))
        for s in range(200)
    ]
    assert abs(np.mean(overlaps) - 10) < 4 * math.sqrt(8.1 / 200)
    assert 4 < np.var(overlaps) < 14


def test_config_validation():
    with pytest.raises(ValueError):
        AnalysisConfig(spaces=())
    with pytest.raises(ValueError):
        AnalysisConfig(spaces=("docking",))
    with pytest.raises(ValueError):
        AnalysisConfig(anchor_count=0)
    with pytest.raises(ValueError):
        AnalysisConfig(seed=-1)


def test_synth_is_deterministic(synth):
    again = synth_generate(300, 20, 8, 0.1, seed=11)
    assert np.array_equal(synth.docking.scores, again.docking.scores, equal_nan=True)
    assert np.array_equal(synth.coherent.pooled, again.coherent.pooled)
    assert synth.fingerprints == again.fingerprints


def test_synth_missing_scores(synth):
    present = synth.docking.present
    assert 0.02 < 1 - present.mean() < 0.08
    assert present.any(axis=1).all()
    assert (present.sum(axis=0) >= 2).all()


def test_concordance_report_shape(synth):
    cfg = AnalysisConfig(anchor_count=20, seed=5, spaces=("embedding", "fingerprint", "random"))
    data = AnalysisData(synth.docking, embeddings=synth.coherent, fingerprints=synth.fingerprints)
    report = run_concordance(cfg, data)
    assert report.universe_size == 300
    assert not report.failures
    for s in report.spaces:
        assert s.n_anchors == 20
        assert s.mean_swaps == sum(a.swaps for a in s.anchors) / 20
        assert s.mean_normalized == pytest.approx(np.mean([a.normalized for a in s.anchors]), rel=1e-12)
        assert all(a.pairs == 299 * 298 // 2 for a in s.anchors)
        assert 0 <= s.mean_normalized <= 1
    assert coherence_ranking(report) == ["embedding", "fingerprint", "random"]
    assert "Normalized Kendall Tau" in report.format_table()
    assert report.to_dict()["metadata"]["effective_anchors"]["random"] == 20


def test_coherent_beats_noisy_beats_random(synth):
    rng = np.random.default_rng(0)
    noisy = EmbeddingSet(dict(zip(synth.molecules, synth.latent + 1.0 * rng.standard_normal(synth.latent.shape))))
    cfg = AnalysisConfig(anchor_count=30, seed=1, spaces=("embedding", "random"))
    means = {}
    for label, emb in (("coherent", synth.coherent), ("noisy", noisy), ("random", synth.random)):
        report = run_concordance(cfg, AnalysisData(synth.docking, embeddings=emb))
        means[label] = report.space("embedding").mean_normalized
        if label == "coherent":
            assert anchor_wins(report.space("embedding"), report.space("random")) == 30
    assert means["coherent"] < means["noisy"] < means["random"]


def test_thread_count_does_not_change_results(synth):
    cfg = AnalysisConfig(anchor_count=16, seed=2, spaces=("embedding", "random"))
    data = AnalysisData(synth.docking, embeddings=synth.coherent)
    assert run_concordance(cfg, data, threads=1).to_dict() == run_concordance(cfg, data, threads=4).to_dict()


def test_row_order_does_not_matter(synth):
    recs = synth.docking.records()
    shuffled = [recs[i] for i in np.random.default_rng(3).permutation(len(recs))]
    entries = {m: synth.coherent.pooled[i] for i, m in enumerate(synth.coherent.molecules)}
    reversed_entries = dict(reversed(list(entries.items())))
    cfg = AnalysisConfig(anchor_count=10, seed=9)
    a = run_concordance(cfg, AnalysisData(synth.docking, embeddings=synth.coherent))
    b = run_concordance(cfg, AnalysisData(DockingMatrix.from_records(shuffled), embeddings=EmbeddingSet(reversed_entries)))
    assert a.to_dict() == b.to_dict()


def test_failed_anchors_are_reported_not_fatal():
    # m3 shares no target with m1/m2, so anchors m1, m2, m3 all hit a pair without overlap
    recs = [("m1", "A", -1.0), ("m2", "A", -2.0), ("m1", "B", -1.0), ("m2", "B", -3.0),
            ("m3", "C", -1.0), ("m4", "C", -2.0), ("m4", "A", -1.5)]
    emb = EmbeddingSet({m: [float(i)] for i, m in enumerate(["m1", "m2", "m3", "m4"])})
    cfg = AnalysisConfig(anchor_count=4, seed=0, spaces=("embedding",))
    report = run_concordance(cfg, AnalysisData(DockingMatrix.from_records(recs), embeddings=emb))
    failed = {f["anchor_id"] for f in report.failures}
    assert failed == {"m1", "m2", "m3"}
    assert all(f["error"] == "NoCommonTargets" for f in report.failures)
    assert report.space("embedding").n_anchors == 1


def test_universe_too_small():
    recs = [("a", "T", 1.0), ("b", "T", 2.0)]
    with pytest.raises(UniverseTooSmall):
        run_concordance(AnalysisConfig(anchor_count=1, spaces=("random",)), AnalysisData(DockingMatrix.from_records(recs)))


def test_feature_space_from_smiles():
    smiles = {"a": "CCO", "b": "CCN", "c": "CCCC", "d": "c1ccccc1"}
    graphs = {m: parse_smiles(s, m) for m, s in smiles.items()}
    recs = [(m, "T", float(i)) for i, m in enumerate(smiles)] + [(m, "U", float(-i)) for i, m in enumerate(smiles)]
    cfg = AnalysisConfig(anchor_count=4, spaces=("feature", "fingerprint"))
    report = run_concordance(cfg, AnalysisData(DockingMatrix.from_records(recs), graphs=graphs))
    assert [s.n_anchors for s in report.spaces] == [4, 4]
    assert report.metadata["fingerprint"] == {"radius": 2, "width": 2048}


def test_single_target_profile_embedding_reproduces_docking_order():
    # with one target, Euclidean distance between scaled profiles equals the docking distance
    rng = np.random.default_rng(4)
    mols = [f"m{i:03d}" for i in range(200)]
    scores = rng.normal(-7, 1, len(mols))
    docking = DockingMatrix.from_records((m, "T", s) for m, s in zip(mols, scores))
    lo, hi = scores.min(), scores.max()
    emb = EmbeddingSet({m: [(s - lo) / (hi - lo)] for m, s in zip(mols, scores)})
    report = run_concordance(AnalysisConfig(anchor_count=20, spaces=("embedding",)), AnalysisData(docking, embeddings=emb))
    assert report.space("embedding").mean_normalized <= 0.01


def test_percentile_arithmetic():
    assert round(percentile_from_indices(31650, 34551, 100001), 1) == 33.1
    assert round(percentile_from_indices(50204, 67119, 100001), 1) == 58.7
    with pytest.raises(ValueError):
        percentile_from_indices(0, 0, 0)


def test_mutual_nearest_neighbours_sit_at_zero():
    pts = {f"b{i:02d}": [10.0 + i] for i in range(30)}
    pts.update({"x": [0.0], "y": [0.1]})
    space = EmbeddingSpace(EmbeddingSet(pts))
    r = cross_rank_percentile("x", "y", space, sample_size=20, seed=1)
    assert (r.index_of_m2_from_m1, r.index_of_m1_from_m2, r.list_length) == (0, 0, 21)
    assert r.percentile == 0.0


def test_percentile_errors_and_determinism():
    space = EmbeddingSpace(EmbeddingSet({f"b{i}": [float(i)] for i in range(10)}))
    with pytest.raises(SampleTooLarge):
        cross_rank_percentile("b0", "b1", space, sample_size=9, seed=0)
    with pytest.raises(UnknownMolecule):
        cross_rank_percentile("b0", "zz", space, sample_size=2, seed=0)
    with pytest.raises(ValueError):
        cross_rank_percentile("b0", "b0", space, sample_size=2, seed=0)
    a = cross_rank_percentile("b0", "b9", space, sample_size=8, seed=0)
    assert a == cross_rank_percentile("b0", "b9", space, sample_size=8, seed=0)
    assert (a.index_of_m2_from_m1, a.index_of_m1_from_m2) == (8, 8)


def test_one_dimensional_noise_free_synth_orders_coincide():
    # a 1-D latent makes every target's term proportional to |z1 - z2|, so the
    # docking sum and the embedding distance rank identically
    data = synth_generate(300, 10, 1, 0.0, seed=3, missing_fraction=0.0)
    cfg = AnalysisConfig(anchor_count=20, spaces=("embedding",))
    report = run_concordance(cfg, AnalysisData(data.docking, embeddings=data.coherent))
    assert report.space("embedding").mean_swaps == 0
