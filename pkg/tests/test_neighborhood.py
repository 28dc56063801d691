import numpy as np
import pytest

from csfkit.core import CoalitionStructure, PartialStructure, bell, enumerate_structures
from csfkit.neighborhood import (ALL_KINDS, EXCHANGE, SPLIT, OperatorKind, apply_operator,
                                 block_sizes, blocks_array, compiled_moves, count_moves,
                                 decode_move, is_redundant, iter_neighborhood, neighborhood,
                                 refinements)

P = CoalitionStructure.parse
BASE = P("[12][3][4]")

TABLE = {
    OperatorKind.SPLIT: {"[1][2][3][4]"},
    OperatorKind.MERGE: {"[123][4]", "[124][3]", "[12][34]"},
    OperatorKind.SHIFT: {"[2][13][4]", "[2][3][14]", "[1][23][4]", "[1][3][24]"},
    OperatorKind.EXCHANGE: {"[23][1][4]", "[24][3][1]", "[13][2][4]", "[14][3][2]"},
    OperatorKind.EXTRACT: {"[1][2][3][4]"},
}


def structures_upto(n):
    for m in range(1, n + 1):
        yield from enumerate_structures(m)


@pytest.mark.parametrize("kind", list(OperatorKind))
def test_operator_table(kind):
    assert apply_operator(BASE, kind) == {P(s) for s in TABLE[kind]}


def test_neighborhood_union_dedups():
    expected = set().union(*({P(s) for s in v} for v in TABLE.values()))
    nb = neighborhood(BASE)
    assert nb == expected
    assert len(nb) == 8
    assert len(list(iter_neighborhood(BASE))) == 8


def test_trivial_neighborhoods():
    assert apply_operator(P("[1][2][3]"), OperatorKind.SPLIT) == set()
    assert apply_operator(P("[123]"), OperatorKind.MERGE) == set()
    assert neighborhood(P("[1]")) == set()
    assert neighborhood(P("[12]")) == {P("[1][2]")}


def test_split_count_per_block():
    cs = P("[12345][6]")
    assert len(apply_operator(cs, OperatorKind.SPLIT)) == 2 ** 4 - 1


@pytest.mark.parametrize("cs", list(structures_upto(6)), ids=str)
def test_outputs_are_valid_and_exclude_input(cs):
    for kind in ALL_KINDS:
        out = apply_operator(cs, kind)
        assert cs not in out
        for s in out:
            assert s.n == cs.n
            assert CoalitionStructure(s.labels) == s  # canonical
    if cs.n >= 2:
        assert neighborhood(cs)


@pytest.mark.parametrize("cs", list(structures_upto(6)), ids=str)
def test_split_merge_reversibility(cs):
    for s in apply_operator(cs, OperatorKind.SPLIT):
        assert cs in apply_operator(s, OperatorKind.MERGE)
    for s in apply_operator(cs, OperatorKind.MERGE):
        assert cs in apply_operator(s, OperatorKind.SPLIT)


@pytest.mark.parametrize("n", range(1, 7))
def test_neighborhood_connects_lattice(n):
    start = next(enumerate_structures(n))
    seen, frontier = {start}, [start]
    while frontier:
        nxt = []
        for cs in frontier:
            for s in neighborhood(cs):
                if s not in seen:
                    seen.add(s)
                    nxt.append(s)
        frontier = nxt
    assert len(seen) == bell(n)


@pytest.mark.parametrize("n", range(1, 7))
def test_split_and_merge_alone_connect(n):
    start = next(enumerate_structures(n))
    seen, frontier = {start}, [start]
    while frontier:
        cs = frontier.pop()
        for kind in (OperatorKind.SPLIT, OperatorKind.MERGE):
            for s in apply_operator(cs, kind):
                if s not in seen:
                    seen.add(s)
                    frontier.append(s)
    assert len(seen) == bell(n)


@pytest.mark.parametrize("cs", list(structures_upto(6)), ids=str)
def test_compiled_moves_match_reference(cs):
    for kind in ALL_KINDS:
        listed = compiled_moves(cs, kind)
        assert len(listed) == len(set(listed)), kind
        assert set(listed) == apply_operator(cs, kind), kind


@pytest.mark.parametrize("cs", list(structures_upto(6)), ids=str)
def test_non_redundant_moves_cover_neighborhood_once(cs):
    blocks = blocks_array(cs)
    sizes = np.zeros(cs.n, dtype=np.int64)
    counts = np.zeros(5, dtype=np.int64)
    block_sizes(blocks, cs.k, sizes)
    count_moves(sizes, cs.k, counts)
    kept = []
    for kind in range(SPLIT, EXCHANGE + 1):
        listed = compiled_moves(cs, OperatorKind(kind))
        for r, s in enumerate(listed):
            i, j, _, _ = decode_move(blocks, sizes, cs.k, kind, r)
            if not is_redundant(sizes, kind, i, j):
                kept.append(s)
    assert len(kept) == len(set(kept))
    assert set(kept) == neighborhood(cs)


class TestRefinements:
    def test_from_empty(self):
        out = refinements(PartialStructure.empty(3))
        assert out == {PartialStructure(3, m, (m,)) for m in (4, 2, 1)}

    def test_one_block(self):
        p = PartialStructure(3, 4, (4,))
        out = refinements(p, 3)
        assert len(out) == 4
        assert out == {
            PartialStructure(3, 6, (6,)), PartialStructure(3, 6, (4, 2)),
            PartialStructure(3, 5, (5,)), PartialStructure(3, 5, (4, 1)),
        }

    def test_complete_rejected(self):
        with pytest.raises(ValueError):
            refinements(PartialStructure(2, 3, (2, 1)))

    def test_count_formula(self):
        p = PartialStructure(6, 0b110100, (0b100100, 0b010000))
        assert len(refinements(p)) == 3 * (2 + 1)
