"""The freeness property: phi evaluation, norm bounds, sigma domination."""

from fractions import Fraction as F

import pytest

from freebanach import Config, Universe, UNIT_ID
from freebanach.scalars import Dyadic
from freebanach.universal import (
    PhiMap,
    TargetSpace,
    check_morphism_bound,
    check_operation_preservation,
    phi_eval,
    sigma_table,
)


def test_phi_examples(exact_universe):
    u = exact_universe
    store = u.store
    x = u.x_id
    xi = store.lookup(store.group_inv(x))
    y = TargetSpace.real(F(1))
    assert phi_eval(u, x, y) == (F(1),)
    assert phi_eval(u, UNIT_ID, y) == (F(0),)
    assert phi_eval(u, xi, y) == (F(-1),)
    g = store.lookup(store.lin_combine([(Dyadic(1, 1), x), (Dyadic(1, 1), xi)]))
    assert phi_eval(u, g, y) == (F(0),)


def test_phi_word_is_additive():
    cfg = Config(stage_count=1, word_caps=(2,))
    u = Universe(cfg).build()
    store = u.store
    x = u.x_id
    xx = store.lookup(store.group_mul(x, x))
    y = TargetSpace.real(F(3, 2))
    assert phi_eval(u, xx, y) == (F(3),)


def test_morphism_bound_all_targets(desk_universe):
    for target in desk_universe.cfg.targets:
        rep = check_morphism_bound(desk_universe, target)
        assert rep.ok, rep.counterexamples[:3]
        # the bound is attained at the generator
        assert rep.meta["worst_ratio_sq"] == "1"


def test_bound_tight_at_generator(desk_universe):
    u = desk_universe
    s2 = u.stage(2)
    for target in u.cfg.targets:
        lhs_sq = target.norm_sq(phi_eval(u, u.x_id, target))
        rhs_sq = target.y_norm_sq() * s2.table[u.x_id] ** 2
        assert lhs_sq == rhs_sq


def test_zero_image_target(desk_universe):
    rep = check_morphism_bound(desk_universe, TargetSpace.real(F(0)))
    assert rep.ok


def test_sigma_base_values(exact_universe):
    u = exact_universe
    target = TargetSpace.real(F(1))
    table, rep = sigma_table(u, target)
    assert rep.ok
    x = u.x_id
    xi = u.store.lookup(u.store.group_inv(x))
    key = (x, UNIT_ID) if x <= UNIT_ID else (UNIT_ID, x)
    assert table.metric_sq[1][key] == 1  # sigma_1(x, e) = 1 = rho_1(x, e)
    key = (x, xi) if x <= xi else (xi, x)
    assert table.metric_sq[1][key] == 4  # sigma_1(x, x^-1) = 2 <= rho = 2


def test_sigma_dominated_normalized(desk_universe):
    """sigma <= rho entrywise after the construction's normalization, for
    every configured target including ||y|| != 1."""
    for target in desk_universe.cfg.targets:
        _, rep = sigma_table(desk_universe, target)
        assert rep.ok, rep.counterexamples[:3]


def test_euclidean_target_exact_squares(desk_universe):
    target = TargetSpace.euclidean((F(1), F(-1, 2)))
    assert target.norm_exact((F(1), F(1))) is None
    assert target.norm_sq((F(3), F(4))) == 25
    rep = check_morphism_bound(desk_universe, target)
    assert rep.ok
    _, rep2 = sigma_table(desk_universe, target)
    assert rep2.ok


def test_operation_preservation(desk_universe):
    for target in desk_universe.cfg.targets:
        rep = check_operation_preservation(desk_universe, target)
        assert rep.ok and rep.attempted > 100


def test_scaling_covariance(desk_universe):
    """Replacing y by lambda*y scales every image by lambda."""
    u = desk_universe
    base = TargetSpace.maximum((F(1), F(-1, 2)))
    for lam in (F(2), F(1, 2)):
        scaled = TargetSpace.maximum(tuple(lam * c for c in base.image))
        phi0, phi1 = PhiMap(u, base), PhiMap(u, scaled)
        for m in list(u.stage(4).members)[:300]:
            assert phi1(m) == tuple(lam * c for c in phi0(m))


def test_target_validation():
    with pytest.raises(ValueError):
        TargetSpace(kind="abs", image=(F(1), F(2)))
    with pytest.raises(ValueError):
        TargetSpace(kind="spectral", image=(F(1),))
