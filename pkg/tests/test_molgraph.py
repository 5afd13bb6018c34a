import random
import re

import pytest
from hypothesis import given, strategies as st

from helpers import parser_corpus, random_smiles
from molspace.errors import (
    EmptyInput,
    InvalidSyntax,
    SmilesError,
    UnbalancedParenthesis,
    UnknownElement,
    UnmatchedRingBond,
    UnsupportedFeature,
    ValenceViolation,
)
from molspace.molgraph import Atom, Bond, BondOrder, MolGraph, implicit_hydrogens, parse_smiles


def test_ethanol():
    g = parse_smiles("CCO", "e1")
    assert g.mol_id == "e1"
    assert [a.symbol for a in g.atoms] == ["C", "C", "O"]
    assert len(g.bonds) == 2
    assert all(b.order is BondOrder.SINGLE for b in g.bonds)
    assert g.hydrogens == (3, 2, 1)


def test_ring_closure_triangle():
    g = parse_smiles("C1CC1", "c1")
    assert len(g.atoms) == 3
    assert {frozenset((b.begin, b.end)) for b in g.bonds} == {
        frozenset((0, 1)),
        frozenset((1, 2)),
        frozenset((0, 2)),
    }
    assert g.ring_atoms == (True, True, True)


def test_unclosed_ring_reports_offset():
    with pytest.raises(UnmatchedRingBond) as info:
        parse_smiles("C1CC", "x1")
    assert info.value.offset == 1


@pytest.mark.parametrize(
    "smiles, expected",
    [("C", (4,)), ("[NH4+]", (4,)), ("O=C=O", (0, 0, 0)), ("c1ccccc1", (1,) * 6)],
)
def test_implicit_hydrogens(smiles, expected):
    assert implicit_hydrogens(parse_smiles(smiles)) == expected


def test_bracket_atom_fields():
    (atom,) = parse_smiles("[13CH3-]").atoms
    assert atom.isotope == 13
    assert atom.explicit_h == 3
    assert atom.formal_charge == -1
    assert atom.bracket


@pytest.mark.parametrize("smiles, charge", [("[O-]", -1), ("[N+]", 1), ("[Fe++]", 2), ("[Fe+3]", 3), ("[O--]", -2)])
def test_charges(smiles, charge):
    assert parse_smiles(smiles).atoms[0].formal_charge == charge


def test_charge_before_hydrogen_count_accepted():
    assert parse_smiles("[N+H4]").hydrogens == (4,)


def test_two_letter_organic_atoms():
    g = parse_smiles("ClCBr")
    assert [a.symbol for a in g.atoms] == ["Cl", "C", "Br"]


def test_percent_ring_numbers():
    g = parse_smiles("C%12CCC%12")
    assert len(g.bonds) == 4


def test_ring_bond_order_from_either_end():
    a = parse_smiles("C=1CCCCC1")
    b = parse_smiles("C1CCCCC=1")
    assert sorted(bd.order for bd in a.bonds) == sorted(bd.order for bd in b.bonds)
    assert BondOrder.DOUBLE in {bd.order for bd in a.bonds}


def test_multi_fragment_is_one_graph():
    g = parse_smiles("CC(=O)[O-].[Na+]")
    assert len(g.atoms) == 5
    assert g.n_fragments == 2


def test_aromaticity_is_taken_verbatim():
    # no perception: a Kekule benzene stays non-aromatic
    g = parse_smiles("C1=CC=CC=C1")
    assert not any(a.aromatic for a in g.atoms)
    assert {b.order for b in g.bonds} == {BondOrder.SINGLE, BondOrder.DOUBLE}


@pytest.mark.parametrize(
    "smiles, error, offset",
    [
        ("", EmptyInput, 0),
        ("C(C", UnbalancedParenthesis, 1),
        ("CC)", UnbalancedParenthesis, 2),
        ("CXC", UnknownElement, 1),
        ("C[Xy]", UnknownElement, 2),
        ("F/C=C/F", UnsupportedFeature, 1),
        ("C[C@H](O)N", UnsupportedFeature, 3),
        ("*C", UnsupportedFeature, 0),
        ("C$C", UnsupportedFeature, 1),
        ("[CH3:1]C", UnsupportedFeature, 4),
        ("C(=O)(=O)=O", ValenceViolation, 0),
        ("FF(F)", ValenceViolation, 1),
        ("C==C", InvalidSyntax, 2),
        ("=C", InvalidSyntax, 0),
        ("C=", InvalidSyntax, 1),
        ("C()", InvalidSyntax, 2),
        ("(C)", InvalidSyntax, 0),
        (".C", InvalidSyntax, 0),
        ("C.", InvalidSyntax, 1),
        ("C..C", InvalidSyntax, 2),
        ("C11", InvalidSyntax, 2),
        ("C1CC1C1", UnmatchedRingBond, 6),
        ("C12CC12", InvalidSyntax, 6),
        ("C=1CC-1", InvalidSyntax, 6),
        ("C%1", InvalidSyntax, 1),
        ("[C", InvalidSyntax, 0),
        ("C C", InvalidSyntax, 1),
        ("1CC", InvalidSyntax, 0),
    ],
)
def test_typed_errors_with_offsets(smiles, error, offset):
    with pytest.raises(error) as info:
        parse_smiles(smiles)
    assert info.value.offset == offset


def test_non_ascii_bytes_are_rejected_at_their_offset():
    with pytest.raises(InvalidSyntax) as info:
        parse_smiles("CCé".encode())
    assert info.value.offset == 2


def test_bytes_and_str_agree():
    assert parse_smiles(b"c1ccccc1O") == parse_smiles("c1ccccc1O")


@pytest.mark.parametrize("record", parser_corpus(), ids=lambda r: r["mol_id"])
def test_corpus_matches_reference_toolkit(record):
    # frozen from RDKit by tests/fixtures/make_parser_fixtures.py
    g = parse_smiles(record["smiles"], record["mol_id"])
    assert len(g.atoms) == record["atoms"]
    assert len(g.bonds) == record["bonds"]
    assert g.n_fragments == record["fragments"]
    assert [a.element for a in g.atoms] == record["elements"]
    assert list(g.hydrogens) == record["hydrogens"]
    assert [a.formal_charge for a in g.atoms] == record["charges"]
    assert [a.aromatic for a in g.atoms] == record["aromatic"]


@pytest.mark.parametrize("record", parser_corpus(), ids=lambda r: r["mol_id"])
def test_bond_count_identity(record):
    s = record["smiles"]
    g = parse_smiles(s)
    # bracket contents hold isotopes/counts, not ring digits
    closures = len(re.findall(r"%\d\d|\d", re.sub(r"\[[^\]]*\]", "A", s))) // 2
    assert len(g.bonds) == len(g.atoms) - g.n_fragments + closures


def test_reparse_is_deterministic():
    for record in parser_corpus():
        assert parse_smiles(record["smiles"]) == parse_smiles(record["smiles"])


def test_graph_invariants_enforced():
    atoms = (Atom(6), Atom(6))
    with pytest.raises(ValueError):
        Bond(0, 0)
    with pytest.raises(ValueError):
        MolGraph("x", atoms, (Bond(0, 5),))
    with pytest.raises(ValueError):
        MolGraph("x", atoms, (Bond(0, 1), Bond(1, 0)))
    with pytest.raises(ValueError):
        Atom(0)


def test_adjacency_symmetric():
    g = parse_smiles("CC(C)(C)c1ccccc1")
    for i, nbrs in enumerate(g.adjacency):
        for j, order in nbrs:
            assert (i, order) in g.adjacency[j]


def test_ring_membership_in_fused_and_chain_atoms():
    g = parse_smiles("CCc1ccc2ccccc2c1")
    assert g.ring_atoms[:2] == (False, False)
    assert all(g.ring_atoms[2:])


@pytest.mark.parametrize("seed", range(5))
def test_random_writer_round_trip(seed):
    rng = random.Random(seed)
    for record in parser_corpus():
        g = parse_smiles(record["smiles"])
        h = parse_smiles(random_smiles(g, rng))
        assert len(h.atoms) == len(g.atoms)
        assert len(h.bonds) == len(g.bonds)
        assert sorted(h.hydrogens) == sorted(g.hydrogens)


_ALPHABET = list("BCNOPSFIclbnops[]()=#:-.%0123456789+H@/\\*$") + ["Cl", "Br"]


@given(st.lists(st.sampled_from(_ALPHABET), max_size=25).map("".join))
def test_parser_is_total_on_grammar_alphabet(s):
    try:
        g = parse_smiles(s)
    except SmilesError as exc:
        assert 0 <= exc.offset <= len(s)
    else:
        assert len(g.hydrogens) == len(g.atoms)


@given(st.binary(max_size=30))
def test_parser_is_total_on_bytes(data):
    try:
        parse_smiles(data)
    except SmilesError as exc:
        assert 0 <= exc.offset <= len(data)
