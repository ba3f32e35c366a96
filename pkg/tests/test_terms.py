"""Algebra core: word reduction, group laws, combination merging, rank."""

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from freebanach.scalars import Dyadic
from freebanach.terms import (
    BasisUnderflowError,
    CanonicalityError,
    ComboTerm,
    GenTerm,
    InvalidLetterError,
    TermStore,
    UNIT,
    UNIT_ID,
    WordTerm,
)


def four_gen_store():
    store = TermStore()
    gens = [store.intern(GenTerm(i)) for i in range(4)]
    for g in gens:
        store.register_generator(g)
    return store, gens


def test_reduce_word_examples():
    store, (x, *_) = four_gen_store()
    assert store.reduce_word([(x, 1), (x, -1)]) == UNIT
    assert store.reduce_word([(x, 1)]) == GenTerm(0)
    assert store.reduce_word([(x, 1), (x, 1)]) == WordTerm(((x, 1), (x, 1)))
    # unit letters are deleted
    assert store.reduce_word([(UNIT_ID, 1), (x, 1), (UNIT_ID, -1)]) == GenTerm(0)


def test_reduce_word_rejects_unregistered():
    store, _ = four_gen_store()
    with pytest.raises(InvalidLetterError):
        store.reduce_word([(99, 1)])


def _naive_reduce(letters):
    """Quadratic scan-until-stable reduction, the independent model."""
    work = list(letters)
    changed = True
    while changed:
        changed = False
        for i in range(len(work) - 1):
            if work[i][0] == work[i + 1][0] and work[i][1] == -work[i + 1][1]:
                del work[i : i + 2]
                changed = True
                break
    return tuple(work)


def test_reduce_exhaustive_small():
    """Idempotence and agreement with the naive model, exhaustively to
    length 5 over a 4-generator signed alphabet."""
    store, gens = four_gen_store()
    letters = [(g, s) for g in gens for s in (1, -1)]
    for n in range(6):
        for seq in itertools.product(letters, repeat=n):
            term = store.reduce_word(seq)
            naive = _naive_reduce(seq)
            if not naive:
                assert term == UNIT
            elif len(naive) == 1 and naive[0][1] == 1:
                assert term == store.term(naive[0][0])
            else:
                assert term == WordTerm(naive)
            # idempotence: reducing the canonical letters changes nothing
            if isinstance(term, WordTerm):
                assert store.reduce_word(term.letters) == term


@pytest.mark.slow
def test_reduce_exhaustive_length_8_two_generators():
    """All raw sequences to length 8 over a two-generator signed alphabet:
    reduction agrees with the naive model and is idempotent.  (The full
    four-generator length-8 sweep is ~4.8e7 sequences; two generators keep
    the same cancellation structure exhaustively testable.)"""
    store, gens = four_gen_store()
    letters = [(g, s) for g in gens[:2] for s in (1, -1)]
    for n in range(9):
        for seq in itertools.product(letters, repeat=n):
            term = store.reduce_word(seq)
            naive = _naive_reduce(seq)
            if not naive:
                assert term == UNIT
            elif len(naive) == 1 and naive[0][1] == 1:
                assert term == store.term(naive[0][0])
            else:
                assert term == WordTerm(naive)


@given(st.lists(st.tuples(st.integers(1, 4), st.sampled_from([1, -1])), max_size=8))
@settings(max_examples=300)
def test_reduce_matches_naive_random(seq):
    store, gens = four_gen_store()
    seq = [(gens[g - 1], s) for g, s in seq]
    naive = _naive_reduce(seq)
    term = store.reduce_word(seq)
    if not naive:
        assert term == UNIT
    elif len(naive) == 1 and naive[0][1] == 1:
        assert term == store.term(naive[0][0])
    else:
        assert term == WordTerm(naive)


def test_group_laws():
    store, gens = four_gen_store()
    sample = [UNIT_ID] + [store.intern(store.reduce_word(w)) for w in [
        ((gens[0], 1),),
        ((gens[0], -1),),
        ((gens[1], 1), (gens[0], 1)),
        ((gens[2], -1), (gens[1], 1), (gens[0], -1)),
        ((gens[3], 1), (gens[3], 1)),
    ]]
    for a in sample:
        assert store.group_mul(a, UNIT_ID) == store.term(a)
        assert store.group_mul(UNIT_ID, a) == store.term(a)
        assert store.group_mul(a, store.inv_id(a)) == UNIT
        assert store.inv_id(store.inv_id(a)) == a
        for b in sample:
            for c in sample:
                ab_c = store.mul_id(store.mul_id(a, b), c)
                a_bc = store.mul_id(a, store.mul_id(b, c))
                assert ab_c == a_bc


def test_group_inv_examples():
    store, (x, *_) = four_gen_store()
    assert store.group_inv(UNIT_ID) == UNIT
    assert store.group_inv(x) == WordTerm(((x, -1),))
    xx = store.intern(WordTerm(((x, 1), (x, 1))))
    assert store.group_inv(xx) == WordTerm(((x, -1), (x, -1)))


def test_opaque_combo_letter():
    """A combination promoted to a generator multiplies without distributing."""
    store, (x, *_) = four_gen_store()
    xi = store.inv_id(x)
    store.register_basis(x)
    store.register_basis(xi)
    g = store.intern(store.lin_combine([(Dyadic(1, 1), x), (Dyadic(1, 1), xi)]))
    store.register_generator(g)
    assert store.group_mul(g, g) == WordTerm(((g, 1), (g, 1)))


def basis_store():
    store = TermStore()
    x = store.intern(GenTerm(0))
    store.register_generator(x)
    xi = store.inv_id(x)
    store.register_basis(x)
    store.register_basis(xi)
    return store, x, xi


def test_lin_combine_examples():
    store, x, xi = basis_store()
    half = Dyadic(1, 1)
    assert store.lin_combine([(half, x), (half, x)]) == GenTerm(0)
    assert store.lin_combine([(half, x), (-half, x)]) == UNIT
    combo = store.lin_combine([(half, x), (Dyadic(1, 2), xi)])
    assert combo == ComboTerm(((x, half), (xi, Dyadic(1, 2))))
    with pytest.raises(BasisUnderflowError):
        other = store.intern(WordTerm(((x, 1), (x, 1))))
        store.lin_combine([(half, other)])
    # unit acts as zero
    assert store.lin_combine([(half, UNIT_ID), (half, x), (half, x)]) == GenTerm(0)


def test_lin_combine_merge_order_irrelevant():
    store, x, xi = basis_store()
    q = Dyadic(1, 2)
    parts = [(q, x), (q, xi), (q, x), (-q, xi)]
    a = store.lin_combine(parts)
    b = store.lin_combine(list(reversed(parts)))
    assert a == b == ComboTerm(((x, Dyadic(1, 1)),))


def test_rank_examples():
    store, x, xi = basis_store()
    half = Dyadic(1, 1)
    assert store.rank(x) == 0
    g = store.intern(store.lin_combine([(half, x), (half, xi)]))
    assert store.rank(g) == 1
    store.register_generator(g)
    gi = store.intern(store.group_inv(g))
    assert store.rank(gi) == 1
    # non-convex combinations have rank zero
    h = store.intern(store.lin_combine([(Dyadic(-1), x), (half, xi)]))
    assert store.rank(h) == 0
    assert store.rank(UNIT_ID) == 0
    # a second-level convex combination over a rank-1 basis element
    store.register_basis(gi)
    g2 = store.intern(store.lin_combine([(half, x), (half, gi)]))
    assert store.rank(g2) == 2


def test_interning():
    store, x, xi = basis_store()
    assert UNIT_ID == 0
    assert store.intern(UNIT) == 0
    assert store.intern(GenTerm(0)) == store.intern(GenTerm(0)) == x
    a = store.intern(store.lin_combine([(Dyadic(1, 1), x), (Dyadic(1, 1), xi)]))
    b = store.intern(store.lin_combine([(Dyadic(1, 2), x), (Dyadic(1, 2), xi)]))
    assert a != b
    with pytest.raises(CanonicalityError):
        store.intern(WordTerm(()))
    with pytest.raises(CanonicalityError):
        store.intern(WordTerm(((x, 1),)))
    with pytest.raises(CanonicalityError):
        store.intern(WordTerm(((x, 1), (x, -1))))
    with pytest.raises(CanonicalityError):
        store.intern(ComboTerm(()))
    with pytest.raises(CanonicalityError):
        store.intern(ComboTerm(((x, Dyadic(1)),)))


def test_id_equality_iff_structural(exact_universe):
    store = exact_universe.store
    seen = {}
    for stage in exact_universe.stages:
        for m in stage.members:
            t = store.term(m)
            assert seen.setdefault(t, m) == m
            assert store.intern(t) == m
