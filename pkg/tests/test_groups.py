import itertools

import numpy as np
import pytest

from configfree.errors import ConfigError, PreconditionError
from configfree.groups import (
    BlockHom,
    Box,
    dihedral_table,
    group_from_descriptor,
    hom_apply,
    make_abelian_group,
    make_cayley_group,
    named_group,
    power,
    subgroup_generated,
    symmetric_table,
)


def test_abelian_orders():
    assert make_abelian_group([5]).order == 5
    assert make_abelian_group([7, 7]).order == 49
    G = make_abelian_group([1])
    assert G.order == 1 and G.identity == 0


def test_abelian_errors():
    with pytest.raises(ConfigError):
        make_abelian_group([])
    with pytest.raises(ConfigError):
        make_abelian_group([10**4, 10**4])


def test_abelian_labels_roundtrip():
    G = make_abelian_group([3, 4])
    for i in range(G.order):
        assert G.index(G.element(i)) == i
    assert G.element(G.op(G.index((2, 3)), G.index((2, 2)))) == (1, 1)


def test_cayley_constructions():
    assert make_cayley_group(symmetric_table(3)).order == 6
    D5 = make_cayley_group(dihedral_table(5))
    assert D5.order == 10 and not D5.is_abelian


def test_cayley_rejects_non_latin():
    t = [[0, 1], [0, 1]]
    with pytest.raises(ConfigError, match="latin"):
        make_cayley_group(t)


def test_cayley_rejects_nonassociative():
    # a latin square with identity 0 that is not a group (order 5 loop)
    t = [[0, 1, 2, 3, 4],
         [1, 0, 3, 4, 2],
         [2, 4, 0, 1, 3],
         [3, 2, 4, 0, 1],
         [4, 3, 1, 2, 0]]
    with pytest.raises(PreconditionError) as exc:
        make_cayley_group(t)
    a, b, c = exc.value.witness
    T = np.array(t)
    assert T[T[a, b], c] != T[a, T[b, c]]


def test_cayley_associativity_exhaustive():
    for G in (named_group("S_3"), named_group("D_5"), named_group("D_4")):
        T = G.table
        n = G.order
        for a, b, c in itertools.product(range(n), repeat=3):
            assert T[T[a, b], c] == T[a, T[b, c]]


def test_power_examples():
    Z5 = make_abelian_group([5])
    assert power(Z5, 2, 3) == 1
    D5 = named_group("D_5")
    rot = 1
    assert power(D5, rot, 5) == D5.identity
    for G in (Z5, D5):
        for x in range(G.order):
            assert power(G, x, 0) == G.identity


def test_power_lagrange():
    for G in (named_group("S_4"), named_group("D_7"), make_abelian_group([4, 6])):
        for x in range(G.order):
            assert power(G, x, G.order) == G.identity


def test_power_negative_is_inverse():
    G = named_group("S_4")
    for x in range(G.order):
        assert G.op(power(G, x, -1), x) == G.identity


def test_subgroup_generated_examples():
    Z6 = make_abelian_group([6])
    assert subgroup_generated(Z6, [2]).members == (0, 2, 4)
    G = make_abelian_group([7, 7])
    H = subgroup_generated(G, [G.index((1, 0))])
    assert len(H) == 7
    assert {G.element(h) for h in H.members} == {(a, 0) for a in range(7)}
    assert subgroup_generated(G, []).members == (G.identity,)


def test_subgroup_order_divides():
    for G in (named_group("S_4"), named_group("D_6"), make_abelian_group([4, 6])):
        for g in range(G.order):
            assert G.order % len(subgroup_generated(G, [g])) == 0


def test_hom_apply_examples():
    Z5 = make_abelian_group([5])
    assert hom_apply(BlockHom([[1, -2, 1]]), Z5, (1, 3, 0)) == (0,)
    ident = BlockHom([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert hom_apply(ident, Z5, (4, 2, 3)) == (4, 2, 3)
    M = BlockHom([[1, -2, 1], [3, 1, -4]])
    for g in range(5):
        assert hom_apply(M, Z5, (g, g, g)) == (0, 0)


def test_hom_apply_arity_mismatch():
    with pytest.raises(ConfigError):
        hom_apply(BlockHom([[1, -1]]), make_abelian_group([5]), (1, 2, 3))


def test_hom_additive_random():
    rng = np.random.default_rng(7)
    G = make_abelian_group([6, 6])
    M = BlockHom(rng.integers(-5, 6, size=(4, 6)).tolist(), m=2)
    for _ in range(200):
        x = rng.integers(0, G.order, size=(1, 3))
        y = rng.integers(0, G.order, size=(1, 3))
        lhs = M.apply_indices(G, G.op(x, y))
        rhs = G.op(M.apply_indices(G, x), M.apply_indices(G, y))
        assert (lhs == rhs).all()


def test_block_invariance_matches_exhaustive():
    G = make_abelian_group([4, 4])
    inv = BlockHom([[1, 0, -1, 0], [0, 2, 0, -2]], m=2)
    non = BlockHom([[1, 0, 1, 0], [0, 1, 0, 0]], m=2)
    assert inv.is_invariant() and inv.is_invariant(G)
    assert not non.is_invariant() and not non.is_invariant(G)


def test_ill_defined_block_rejected():
    G = make_abelian_group([4, 6])
    M = BlockHom([[1, 1], [0, 1]], m=2)  # maps Z_6 into Z_4 component
    with pytest.raises(ConfigError):
        M.apply_indices(G, np.zeros((1, 1), dtype=np.int64))


def test_descriptors():
    assert group_from_descriptor("Z_5^2").order == 25
    assert group_from_descriptor({"type": "abelian", "moduli": [2, 3]}).order == 6
    G = group_from_descriptor({"type": "cayley", "table": symmetric_table(3).tolist()})
    assert G.order == 6
    with pytest.raises(ConfigError) as exc:
        group_from_descriptor({"type": "abelian"})
    assert exc.value.pointer == "/moduli"
    with pytest.raises(ConfigError):
        named_group("S_6")


def test_box_coordinates():
    B = Box(3, 2)
    assert B.order == 9
    assert B.element(0) == (1, 1) and B.element(8) == (3, 3)
    assert B.index((2, 3)) == 5
    with pytest.raises(ConfigError):
        B.index((0, 1))
