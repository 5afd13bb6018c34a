"""``molspace`` command-line interface.

Exit status: 0 on success, 1 on data errors (one line on stderr naming the
file and line), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from . import io as mio
from .errors import MolSpaceError, NoCommonTargets
from .fingerprint import DEFAULT_RADIUS, DEFAULT_WIDTH, check_width, morgan_fingerprint
from .pipeline import (
    COMPARABLE_SPACES,
    AnalysisConfig,
    AnalysisData,
    cross_rank_percentile,
    run_concordance,
    synth_generate,
)
from .ranktau import kendall_tau, rank_by_anchor
from .spaces import docking_distance

log = logging.getLogger("molspace")

FORMATS = """\
file formats (UTF-8, tab-separated, '#' lines are comments):
  SMILES        mol_id<TAB>smiles; mol_ids unique
  docking       mol_id<TAB>target_id<TAB>score (kcal/mol, lower is better);
                missing pairs are simply absent
  embeddings    per-atom: mol_id<TAB>atom_index<TAB>v0 ... v{d-1}
                pooled:   mol_id<TAB>v0 ... v{d-1}
                optional header '#format=atoms' or '#format=pooled'; never mix
  fingerprints  header '#width=B radius=R', then mol_id<TAB>hex (B/4 chars,
                bit 0 = most significant bit of the first char)
  ordering      header '#anchor=<id> space=<name>', then
                rank<TAB>mol_id<TAB>distance with 0-based ranks
"""


class _Formatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    pass


def num(x) -> str:
    """Shortest round-trip decimal; integral values drop the trailing '.0'."""
    if isinstance(x, int):
        return str(x)
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _non_negative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return value


def _non_negative_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError("must be a non-negative number")
    return value


def _width(text):
    value = int(text)
    try:
        check_width(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _default_threads() -> int:
    env = os.environ.get("MOLSPACE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _add_data_args(p, *, docking=True):
    g = p.add_argument_group("data")
    if docking:
        g.add_argument("--docking", metavar="TSV", help="docking score table")
    g.add_argument("--embeddings", metavar="TSV", help="per-atom or pooled embeddings")
    g.add_argument("--smiles", metavar="SMI", help="SMILES file (feature and fingerprint spaces)")
    g.add_argument("--fingerprints", metavar="TSV", help="precomputed fingerprints; overrides --smiles for the fingerprint space")
    g.add_argument("--radius", type=_non_negative_int, default=DEFAULT_RADIUS, help="fingerprint radius")
    g.add_argument("--width", type=_width, default=DEFAULT_WIDTH, help="fingerprint width in bits")
    g.add_argument("--per-target-mean", action="store_true", help="divide docking distances by the number of shared targets")
    g.add_argument("--min-shared-targets", type=_positive, default=1, help="minimum shared targets for a docking distance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="molspace",
        description="Compare molecular similarity spaces with anchor orderings and Kendall-Tau distance.",
        epilog=FORMATS,
        formatter_class=_Formatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, description=help_text, epilog=FORMATS, formatter_class=_Formatter)

    p = add("parse", "parse a SMILES file and print atom/bond/hydrogen counts")
    p.add_argument("--smiles", required=True, metavar="SMI", help="SMILES file")
    p.add_argument("--out", metavar="TSV", help="write the summary here instead of stdout")

    p = add("fp", "compute Morgan fingerprints for a SMILES file")
    p.add_argument("--smiles", required=True, metavar="SMI", help="SMILES file")
    p.add_argument("--radius", type=_non_negative_int, default=DEFAULT_RADIUS, help="neighbourhood iterations")
    p.add_argument("--width", type=_width, default=DEFAULT_WIDTH, help="bits per fingerprint (power of two, 64..65536)")
    p.add_argument("--out", metavar="TSV", help="fingerprint file to write (default stdout)")

    p = add("dist", "distance between two molecules in one space")
    p.add_argument("--space", required=True, choices=("docking", "embedding", "feature", "fingerprint"))
    p.add_argument("--m1", required=True, help="first molecule id")
    p.add_argument("--m2", required=True, help="second molecule id")
    _add_data_args(p)

    p = add("rank", "rank all molecules by distance to an anchor")
    p.add_argument("--space", required=True, choices=("docking", "embedding", "feature", "fingerprint"))
    p.add_argument("--anchor", required=True, help="anchor molecule id")
    p.add_argument("--out", metavar="TSV", help="ordering file to write (default stdout)")
    _add_data_args(p)

    p = add("kt", "Kendall-Tau distance between two ordering files")
    p.add_argument("--a", required=True, metavar="TSV", help="first ordering")
    p.add_argument("--b", required=True, metavar="TSV", help="second ordering")

    p = add("analyze", "concordance of each space with the docking space over random anchors")
    _add_data_args(p)
    p.add_argument(
        "--spaces",
        help=f"comma-separated subset of {','.join(COMPARABLE_SPACES)}; "
        "default: every space the inputs allow, plus random",
    )
    p.add_argument("--anchors", type=_positive, default=100, help="number of anchor molecules")
    p.add_argument("--seed", type=_seed, default=0, help="random seed")
    p.add_argument("--threads", type=_positive, default=None, help="worker threads (default: $MOLSPACE_THREADS or all cores)")
    p.add_argument("--out", metavar="JSON", help="write the JSON report here")
    p.add_argument("--progress", action="store_true", help="print a per-anchor counter to stderr")

    p = add("percentile", "mutual rank percentile of two molecules against a random background")
    p.add_argument("--space", required=True, choices=("docking", "embedding", "feature", "fingerprint"))
    p.add_argument("--m1", required=True, help="first molecule id")
    p.add_argument("--m2", required=True, help="second molecule id")
    p.add_argument("--sample-size", type=_non_negative_int, default=1000, help="background molecules to draw")
    p.add_argument("--seed", type=_seed, default=0, help="random seed")
    _add_data_args(p)

    p = add("synth", "generate a synthetic docking/embedding/fingerprint data set")
    p.add_argument("--molecules", type=int, default=1000, help="number of molecules (>= 3)")
    p.add_argument("--targets", type=_positive, default=50, help="number of docking targets")
    p.add_argument("--dim", type=_positive, default=16, help="latent and embedding dimension")
    p.add_argument("--noise", type=_non_negative_float, default=0.1, help="Gaussian noise on scores and coherent embeddings")
    p.add_argument("--missing", type=float, default=0.05, help="fraction of docking scores to drop")
    p.add_argument("--fp-width", type=_width, default=DEFAULT_WIDTH, help="surrogate fingerprint width")
    p.add_argument("--fp-noise", type=_non_negative_float, default=1.0, help="noise added to the latent before fingerprint hashing")
    p.add_argument("--seed", type=_seed, default=0, help="random seed")
    p.add_argument("--out-dir", required=True, metavar="DIR", help="output directory (created if missing)")
    return parser


# -- helpers ----------------------------------------------------------------

def _input_paths(args) -> list[str]:
    names = ("smiles", "docking", "embeddings", "fingerprints", "a", "b")
    return [getattr(args, n) for n in names if getattr(args, n, None)]


def _check_paths(parser, args) -> None:
    for path in _input_paths(args):
        if not Path(path).is_file():
            parser.error(f"input file not found: {path}")
    for name in ("out",):
        out = getattr(args, name, None)
        if out and not Path(out).resolve().parent.is_dir():
            parser.error(f"output directory does not exist: {Path(out).parent}")


def _load(args, needed: set[str]) -> AnalysisData:
    """Load only the sources the requested spaces need."""
    docking = mio.read_docking(args.docking) if "docking" in needed else None
    embeddings = mio.read_embeddings(args.embeddings) if "embedding" in needed else None
    fingerprints = None
    graphs = None
    if "fingerprint" in needed and args.fingerprints:
        fingerprints = mio.read_fingerprints(args.fingerprints)
    if "feature" in needed or ("fingerprint" in needed and fingerprints is None):
        graphs = mio.read_smiles(args.smiles)
    provenance = {
        "inputs": {
            k: getattr(args, k)
            for k in ("docking", "embeddings", "smiles", "fingerprints")
            if getattr(args, k, None)
        }
    }
    return AnalysisData(
        docking=docking,
        embeddings=embeddings,
        graphs=graphs,
        fingerprints=fingerprints,
        fp_radius=args.radius,
        fp_width=args.width,
        provenance=provenance,
    )


def _require(parser, args, space: str) -> None:
    need = {
        "docking": ("docking",),
        "embedding": ("embeddings",),
        "feature": ("smiles",),
        "fingerprint": ("fingerprints", "smiles"),
    }[space]
    if not any(getattr(args, n, None) for n in need):
        flags = " or ".join("--" + n for n in need)
        parser.error(f"the {space} space needs {flags}")


def _open_out(path):
    return open(path, "w", encoding="utf-8") if path else sys.stdout


# -- commands ---------------------------------------------------------------

def cmd_parse(args, parser):
    graphs = mio.read_smiles(args.smiles)
    fh = _open_out(args.out)
    try:
        fh.write("mol_id\tatoms\tbonds\tfragments\thydrogens\n")
        for mol_id, g in graphs.items():
            hs = ",".join(str(h) for h in g.hydrogens)
            fh.write(f"{mol_id}\t{len(g.atoms)}\t{len(g.bonds)}\t{g.n_fragments}\t{hs}\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_fp(args, parser):
    graphs = mio.read_smiles(args.smiles)
    fps = {m: morgan_fingerprint(g, args.radius, args.width) for m, g in graphs.items()}
    if args.out:
        mio.write_fingerprints(args.out, fps)
    else:
        sys.stdout.write(f"#width={args.width} radius={args.radius}\n")
        for m, fp in fps.items():
            sys.stdout.write(f"{m}\t{fp.to_hex()}\n")


def cmd_dist(args, parser):
    _require(parser, args, args.space)
    data = _load(args, {args.space})
    if args.space == "docking":
        d = docking_distance(args.m1, args.m2, data.docking, args.per_target_mean)
        if d.n_targets < args.min_shared_targets:
            raise NoCommonTargets(f"only {d.n_targets} shared targets (minimum {args.min_shared_targets})")
        print(f"distance={num(d.value)} shared_targets={d.n_targets}")
    else:
        value = data.space(args.space).distances_from(args.m1, [args.m2])[0]
        print(f"distance={num(value)}")


def _space_for(args, data):
    if args.space == "docking":
        return data.space(
            "docking", per_target_mean=args.per_target_mean, min_shared_targets=args.min_shared_targets
        )
    return data.space(args.space)


def cmd_rank(args, parser):
    _require(parser, args, args.space)
    data = _load(args, {args.space})
    space = _space_for(args, data)
    ordering = rank_by_anchor(args.anchor, space, space.molecules)
    if args.out:
        mio.write_ordering(args.out, ordering)
    else:
        sys.stdout.write(f"#anchor={ordering.anchor} space={ordering.space}\n")
        for i, (m, d) in enumerate(zip(ordering.ranked, ordering.distances)):
            sys.stdout.write(f"{i}\t{m}\t{mio.fmt(d)}\n")


def cmd_kt(args, parser):
    a = mio.read_ordering(args.a)
    b = mio.read_ordering(args.b)
    tau = kendall_tau(a, b)
    print(f"swaps={tau.swaps} pairs={tau.pairs} normalized={num(tau.normalized)}")


def _analysis_spaces(parser, args) -> tuple[str, ...]:
    if args.spaces:
        spaces = tuple(s.strip() for s in args.spaces.split(",") if s.strip())
        bad = [s for s in spaces if s not in COMPARABLE_SPACES]
        if bad or not spaces:
            parser.error(f"--spaces must be a subset of {','.join(COMPARABLE_SPACES)}")
        for s in spaces:
            if s != "random":
                _require(parser, args, s)
        return spaces
    spaces = []
    if args.embeddings:
        spaces.append("embedding")
    if args.smiles:
        spaces.append("feature")
    if args.smiles or args.fingerprints:
        spaces.append("fingerprint")
    spaces.append("random")
    return tuple(spaces)


def cmd_analyze(args, parser):
    _require(parser, args, "docking")
    spaces = _analysis_spaces(parser, args)
    try:
        cfg = AnalysisConfig(
            anchor_count=args.anchors,
            seed=args.seed,
            spaces=spaces,
            min_shared_targets=args.min_shared_targets,
            per_target_mean=args.per_target_mean,
        )
    except ValueError as exc:
        parser.error(str(exc))
    data = _load(args, {"docking", *spaces})
    threads = args.threads or _default_threads()

    def progress(done, total):
        print(f"anchor {done}/{total}", file=sys.stderr)

    report = run_concordance(cfg, data, threads=threads, progress=progress if args.progress else None)
    if args.out:
        mio.write_report(args.out, report)
    print(report.format_table())


def cmd_percentile(args, parser):
    _require(parser, args, args.space)
    data = _load(args, {args.space})
    space = _space_for(args, data)
    res = cross_rank_percentile(args.m1, args.m2, space, args.sample_size, args.seed)
    print(
        f"index_m2_from_m1={res.index_of_m2_from_m1} index_m1_from_m2={res.index_of_m1_from_m2} "
        f"list_length={res.list_length} mean_index={num(res.mean_index)} "
        f"percentile={num(res.percentile)}"
    )


def cmd_synth(args, parser):
    if args.molecules < 3:
        parser.error("--molecules must be at least 3")
    if not 0 <= args.missing < 1:
        parser.error("--missing must be in [0, 1)")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = synth_generate(
        args.molecules,
        args.targets,
        args.dim,
        args.noise,
        args.seed,
        missing_fraction=args.missing,
        fp_width=args.fp_width,
        fp_noise=args.fp_noise,
    )
    mio.write_docking(out / "docking.tsv", data.docking)
    mio.write_embeddings(out / "embeddings.tsv", dict(zip(data.coherent.molecules, data.coherent.pooled)))
    mio.write_embeddings(out / "embeddings_random.tsv", dict(zip(data.random.molecules, data.random.pooled)))
    mio.write_fingerprints(out / "fingerprints.tsv", data.fingerprints)
    (out / "params.json").write_text(json.dumps(data.params, indent=2) + "\n", encoding="utf-8")
    print(f"wrote docking.tsv, embeddings.tsv, embeddings_random.tsv, fingerprints.tsv, params.json to {out}")


COMMANDS = {
    "parse": cmd_parse,
    "fp": cmd_fp,
    "dist": cmd_dist,
    "rank": cmd_rank,
    "kt": cmd_kt,
    "analyze": cmd_analyze,
    "percentile": cmd_percentile,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        _check_paths(parser, args)
        COMMANDS[args.command](args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    except MolSpaceError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
