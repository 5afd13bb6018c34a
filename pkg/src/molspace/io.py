"""Readers and writers for the tab-separated data files and JSON reports.

Every reader raises :class:`~molspace.errors.LoadError` naming the file and
1-based line number of the first problem. Blank lines and lines starting
with ``#`` are skipped unless they carry a recognised header.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from .errors import LoadError, MolSpaceError, SmilesError
from .fingerprint import Fingerprint, check_width
from .molgraph import MolGraph, parse_smiles
from .ranktau import Ordering
from .spaces import DockingMatrix, EmbeddingSet

_INT = re.compile(r"\d+\Z")


def _rows(path) -> Iterator[tuple[int, str]]:
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\r\n")
                if not line.strip() or line.startswith("#"):
                    continue
                yield lineno, line
    except UnicodeDecodeError as exc:
        raise LoadError(path, 0, f"not valid UTF-8: {exc}") from None
    except OSError as exc:
        raise LoadError(path, 0, exc.strerror or str(exc)) from None


def _headers(path) -> list[tuple[int, str]]:
    out = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                if raw.startswith("#"):
                    out.append((lineno, raw[1:].strip()))
    except (OSError, UnicodeDecodeError) as exc:
        raise LoadError(path, 0, str(exc)) from None
    return out


def _float(path, lineno, text) -> float:
    try:
        value = float(text)
    except ValueError:
        raise LoadError(path, lineno, f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise LoadError(path, lineno, f"non-finite value: {text!r}")
    return value


def fmt(x: float) -> str:
    """Shortest decimal that round-trips to the same double."""
    return repr(float(x))


# -- SMILES -----------------------------------------------------------------

def read_smiles_records(path) -> list[tuple[str, str, int]]:
    records = []
    seen = set()
    for lineno, line in _rows(path):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise LoadError(path, lineno, "expected 'mol_id<TAB>smiles'")
        mol_id, smiles = parts
        if mol_id in seen:
            raise LoadError(path, lineno, f"duplicate mol_id {mol_id!r}")
        seen.add(mol_id)
        records.append((mol_id, smiles, lineno))
    return records


def read_smiles(path) -> dict[str, MolGraph]:
    graphs = {}
    for mol_id, smiles, lineno in read_smiles_records(path):
        try:
            graphs[mol_id] = parse_smiles(smiles, mol_id)
        except SmilesError as exc:
            raise LoadError(path, lineno, f"{mol_id}: {type(exc).__name__}: {exc}") from exc
    return graphs


# -- docking scores ---------------------------------------------------------

def read_docking(path) -> DockingMatrix:
    records = []
    seen = set()
    for lineno, line in _rows(path):
        parts = line.split("\t")
        if len(parts) != 3 or not parts[0] or not parts[1]:
            raise LoadError(path, lineno, "expected 'mol_id<TAB>target_id<TAB>score'")
        key = (parts[0], parts[1])
        if key in seen:
            raise LoadError(path, lineno, f"duplicate score for {key}")
        seen.add(key)
        records.append((parts[0], parts[1], _float(path, lineno, parts[2])))
    if not records:
        raise LoadError(path, 0, "no docking scores")
    return DockingMatrix.from_records(records)


def write_docking(path, matrix: DockingMatrix) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# mol_id\ttarget_id\tscore\n")
        for m, t, s in matrix.records():
            fh.write(f"{m}\t{t}\t{fmt(s)}\n")


# -- embeddings -------------------------------------------------------------

def read_embeddings(path) -> EmbeddingSet:
    """Read per-atom (``mol_id, atom_index, v...``) or pooled (``mol_id, v...``) rows.

    A ``#format=atoms`` or ``#format=pooled`` header fixes the form. Without
    one, rows whose second field is a bare non-negative integer are taken as
    per-atom; a file mixing both kinds is rejected.
    """
    form = None
    for lineno, text in _headers(path):
        if text.startswith("format="):
            form = text.split("=", 1)[1].strip()
            if form not in ("atoms", "pooled"):
                raise LoadError(path, lineno, f"unknown embedding format {form!r}")
    rows = list(_rows(path))
    if not rows:
        raise LoadError(path, 0, "no embeddings")
    if form is None:
        atom_like = [bool(_INT.match(line.split("\t")[1])) if "\t" in line else False for _, line in rows]
        if all(atom_like):
            form = "atoms"
        elif not any(atom_like):
            form = "pooled"
        else:
            first = rows[atom_like.index(not atom_like[0])][0]
            raise LoadError(path, first, "per-atom and pooled rows are mixed in one file")

    skip = 2 if form == "atoms" else 1
    dim = None
    atoms: dict[str, dict[int, np.ndarray]] = {}
    pooled: dict[str, np.ndarray] = {}
    for lineno, line in rows:
        parts = line.split("\t")
        if len(parts) <= skip or not parts[0]:
            raise LoadError(path, lineno, f"too few columns for {form} embeddings")
        vec = np.array([_float(path, lineno, x) for x in parts[skip:]])
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise LoadError(path, lineno, f"dimension {vec.size} differs from {dim}")
        mol_id = parts[0]
        if form == "pooled":
            if mol_id in pooled:
                raise LoadError(path, lineno, f"duplicate mol_id {mol_id!r}")
            pooled[mol_id] = vec
        else:
            if not _INT.match(parts[1]):
                raise LoadError(path, lineno, f"atom index must be a non-negative integer: {parts[1]!r}")
            slots = atoms.setdefault(mol_id, {})
            idx = int(parts[1])
            if idx in slots:
                raise LoadError(path, lineno, f"duplicate atom {idx} for {mol_id!r}")
            slots[idx] = vec
    if form == "atoms":
        for mol_id, slots in atoms.items():
            if sorted(slots) != list(range(len(slots))):
                raise LoadError(path, 0, f"atom indices of {mol_id!r} are not 0..{len(slots) - 1}")
            pooled[mol_id] = np.vstack([slots[i] for i in range(len(slots))])
    try:
        return EmbeddingSet(pooled)
    except (MolSpaceError, ValueError) as exc:
        raise LoadError(path, 0, str(exc)) from None


def write_embeddings(path, entries: Mapping[str, np.ndarray]) -> None:
    """Write pooled vectors (1-D entries) or per-atom matrices (2-D entries)."""
    arrays = {m: np.asarray(v, dtype=np.float64) for m, v in entries.items()}
    ndims = {a.ndim for a in arrays.values()}
    if len(ndims) > 1:
        raise ValueError("cannot mix pooled and per-atom embeddings in one file")
    form = "atoms" if ndims == {2} else "pooled"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#format={form}\n")
        for m in sorted(arrays):
            a = arrays[m]
            if form == "pooled":
                fh.write(m + "\t" + "\t".join(fmt(x) for x in a) + "\n")
            else:
                for i, row in enumerate(a):
                    fh.write(f"{m}\t{i}\t" + "\t".join(fmt(x) for x in row) + "\n")


# -- fingerprints -----------------------------------------------------------

def read_fingerprints(path) -> dict[str, Fingerprint]:
    width = radius = None
    for lineno, text in _headers(path):
        fields = dict(kv.split("=", 1) for kv in text.split() if "=" in kv)
        if "width" in fields:
            try:
                width = int(fields["width"])
                radius = int(fields.get("radius", 0))
                check_width(width)
            except ValueError as exc:
                raise LoadError(path, lineno, f"bad fingerprint header: {exc}") from None
    if width is None:
        raise LoadError(path, 1, "missing '#width=B radius=R' header")
    fps = {}
    for lineno, line in _rows(path):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0]:
            raise LoadError(path, lineno, "expected 'mol_id<TAB>hex'")
        if parts[0] in fps:
            raise LoadError(path, lineno, f"duplicate mol_id {parts[0]!r}")
        try:
            if not re.fullmatch(r"[0-9a-fA-F]*", parts[1]):
                raise ValueError("not a hex string")
            fps[parts[0]] = Fingerprint.from_hex(parts[1], width, radius=radius, mol_id=parts[0])
        except ValueError as exc:
            raise LoadError(path, lineno, str(exc)) from None
    return fps


def write_fingerprints(path, fps: Mapping[str, Fingerprint]) -> None:
    items = sorted(fps.items())
    widths = {fp.width for _, fp in items}
    radii = {fp.radius for _, fp in items}
    if len(widths) > 1 or len(radii) > 1:
        raise ValueError("all fingerprints in a file must share width and radius")
    width = widths.pop() if widths else 2048
    radius = radii.pop() if radii else 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#width={width} radius={radius}\n")
        for m, fp in items:
            fh.write(f"{m}\t{fp.to_hex()}\n")


# -- orderings --------------------------------------------------------------

def read_ordering(path) -> Ordering:
    anchor = space = None
    for lineno, text in _headers(path):
        fields = dict(kv.split("=", 1) for kv in text.split() if "=" in kv)
        if "anchor" in fields:
            anchor, space = fields["anchor"], fields.get("space", "")
    if anchor is None:
        raise LoadError(path, 1, "missing '#anchor=<id> space=<name>' header")
    ranked, dists = [], []
    for lineno, line in _rows(path):
        parts = line.split("\t")
        if len(parts) != 3:
            raise LoadError(path, lineno, "expected 'rank<TAB>mol_id<TAB>distance'")
        if parts[0] != str(len(ranked)):
            raise LoadError(path, lineno, f"expected rank {len(ranked)}, got {parts[0]!r}")
        ranked.append(parts[1])
        dists.append(_float(path, lineno, parts[2]))
    try:
        return Ordering(anchor, space, tuple(ranked), tuple(dists))
    except ValueError as exc:
        raise LoadError(path, 0, str(exc)) from None


def write_ordering(path, ordering: Ordering) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#anchor={ordering.anchor} space={ordering.space}\n")
        for i, (m, d) in enumerate(zip(ordering.ranked, ordering.distances)):
            fh.write(f"{i}\t{m}\t{fmt(d)}\n")


# -- reports ----------------------------------------------------------------

def dumps_report(report) -> str:
    return json.dumps(report.to_dict(), indent=2, allow_nan=False) + "\n"


def write_report(path, report) -> None:
    Path(path).write_text(dumps_report(report), encoding="utf-8")
