"""Compare the structure of molecular similarity spaces.

Docking-score, embedding, atom-feature and fingerprint spaces are each
turned into anchor-based orderings, and orderings are compared with the
Kendall-Tau rank distance.
"""

from .errors import MolSpaceError
from .fingerprint import Fingerprint, morgan_fingerprint, tanimoto_distance, tanimoto_similarity
from .molgraph import MolGraph, implicit_hydrogens, parse_smiles
from .pipeline import (
    AnalysisConfig,
    AnalysisData,
    ConcordanceReport,
    cross_rank_percentile,
    run_concordance,
    sample_anchors,
    synth_generate,
)
from .ranktau import Ordering, TauResult, count_inversions, kendall_tau, rank_by_anchor
from .spaces import (
    DockingMatrix,
    EmbeddingSet,
    FeatureConfig,
    docking_distance,
    embedding_distance,
    feature_distance,
    featurize,
    pool_max,
)

__version__ = "0.1.0"
