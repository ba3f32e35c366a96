"""Tower construction: sizes, chain monotonicity, bookkeeping, determinism."""

import pytest

from freebanach import Config, Universe, UNIT_ID, BudgetExceededError
from freebanach.scalars import Dyadic
from freebanach.stages import ConfigError, NotBuiltError


def test_stage1_construction_exact():
    u = Universe(Config.exact_x2(stage_count=1)).build()
    s1 = u.stage(1)
    assert len(s1.members) == 3  # e, x, x^-1
    assert s1.members[0] == UNIT_ID
    assert set(s1.generators) == {u.x_id}


def test_stage1_cap2():
    cfg = Config(stage_count=1, word_caps=(2,))
    u = Universe(cfg).build()
    assert len(u.stage(1).members) == 5  # e, x, x^-1, xx, x^-1 x^-1


def test_stage2_sizes():
    assert len(Universe(Config.exact_x2()).build().stage(2).members) == 81
    assert len(Universe(Config.rank(stage_count=2)).build().stage(2).members) == 25
    assert len(Universe(Config.desk(stage_count=2)).build().stage(2).members) == 9


def test_budget_error():
    cfg = Config(stage_count=3, member_budget=10)
    with pytest.raises(BudgetExceededError):
        Universe(cfg).build()


def test_membership_examples(exact_universe):
    u = exact_universe
    x = u.x_id
    assert u.membership(x, 1)
    assert u.membership(UNIT_ID, 0)
    store = u.store
    g = store.lookup(store.lin_combine([(Dyadic(1, 1), x), (Dyadic(1, 1), store.inv_id(x))]))
    assert not u.membership(g, 1)
    assert u.membership(g, 2)
    with pytest.raises(NotBuiltError):
        u.membership(x, 7)


def test_chain_monotone(desk_universe):
    stages = desk_universe.stages
    for prev, cur in zip(stages, stages[1:]):
        assert prev.member_set <= cur.member_set


def test_bookkeeping_identities(desk_universe):
    u = desk_universe
    # S_{2n+1} \ S_{2n-1} = X_{2n} \ X_{2n-1}, element for element
    s1, s3 = u.stage(1), u.stage(3)
    assert set(s3.generators) - set(s1.generators) == u.stage(2).member_set - s1.member_set
    # B_{2n+2} \ B_{2n} = X_{2n+1} \ X_{2n}
    s2, s4 = u.stage(2), u.stage(4)
    assert set(s4.basis) - set(s2.basis) == u.stage(3).member_set - s2.member_set


def test_rank_bounded_by_stage(rank_universe):
    """The rank recursion descends stages, so rank <= stage index."""
    u = rank_universe
    for stage in u.stages:
        for m in stage.members:
            assert 0 <= u.store.rank(m) <= stage.index


def test_run_suite_budget_error_no_partial_report():
    from freebanach.verify import run_suite

    with pytest.raises(BudgetExceededError):
        run_suite(Config(stage_count=3, member_budget=10))


def test_rank_positive_implies_prev_stage(rank_universe):
    """Positive-rank members of a word stage: the element or its inverse
    lies in the previous vector stage."""
    u = rank_universe
    s3, s2 = u.stage(3), u.stage(2)
    found = 0
    for m in s3.members:
        if u.store.rank(m) > 0:
            found += 1
            inv = u.store.lookup(u.store.group_inv(m))
            assert m in s2.member_set or (inv is not None and inv in s2.member_set)
    assert found >= 2  # the half-sum combination and its inverse


def test_determinism_two_builds():
    cfg = Config.desk(stage_count=3)
    u1 = Universe(cfg).build()
    u2 = Universe(cfg).build()
    for a, b in zip(u1.stages, u2.stages):
        assert a.members == b.members
        assert a.table == b.table
        assert a.generators == b.generators
        assert a.basis == b.basis


def test_scalar_set_validation():
    with pytest.raises(ConfigError):
        Config(scalar_sets=((Dyadic(0), Dyadic(1)),)).validate()  # not symmetric
    with pytest.raises(ConfigError):
        Config(scalar_sets=((Dyadic(-1), Dyadic(1)),)).validate()  # no zero
    with pytest.raises(ConfigError):
        Config(word_caps=(2, 1)).validate()  # decreasing caps break the chain
    with pytest.raises(ConfigError):
        Config(stage_count=0).validate()


def test_vector_stage_collapses_contain_previous(desk_universe):
    """The coefficient enumeration reproduces e and the basis elements."""
    s2 = desk_universe.stage(2)
    assert UNIT_ID in s2.member_set
    for b in s2.basis:
        assert b in s2.member_set


def test_empty_basis_degenerate():
    u = Universe(Config.desk(stage_count=1)).build()
    s0 = u.stages[0]
    assert s0.members == (UNIT_ID,)
    assert s0.kind == "vector"
    assert s0.table[UNIT_ID] == 0
