import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakclosure import class2 as c2
from weakclosure import gfp, reps
from weakclosure.class2 import h_comm_gen, h_gen, h_mul


OM2 = c2.omega_of_size(2)
OM4 = c2.omega_of_size(4)


def test_v1_images():
    a, b = h_gen(OM2, "a"), h_gen(OM2, "b")
    assert np.array_equal(reps.v1_matrix(a, ("a", "b")), c2.V1_A)
    assert np.array_equal(reps.v1_matrix(b, ("a", "b")), c2.V1_B)
    assert np.array_equal(reps.v1_matrix(h_comm_gen(OM2, "a", "b"), ("a", "b")), c2.V1_C)


def test_v2_is_kronecker():
    x = h_gen(OM4, "a")
    m = reps.v2_matrix(x, ("a", "b", "c", "d"))
    assert np.array_equal(m, gfp.kronecker(c2.V1_A, gfp.identity(3)))
    with pytest.raises(ValueError):
        reps.v2_matrix(x, ("a", "a", "c", "d"))


def test_v1_fixed_dims_and_jlog():
    V = reps.v1_module(OM2)
    a, b, c = h_gen(OM2, "a"), h_gen(OM2, "b"), h_comm_gen(OM2, "a", "b")
    assert V.fixed_space_dim([a]) == 2
    assert V.fixed_space_dim([a, b]) == 1
    assert V.fixed_space_dim([]) == 3
    assert reps.jlog([a, c], 2, V).log3 == 1
    assert reps.jlog([b, c], 2, V).log3 == 0
    assert reps.jlog([c], 1, V).log3 == 0
    assert reps.jlog([a, b], 3, V).log3 == 1
    assert reps.jlog([a, c], 2, V).is_offender
    assert not reps.JValue(-1).is_offender
    assert reps.JValue(2).as_fraction() == "3^2"


def test_v1_quadratic_elements():
    V = reps.v1_module(OM2)
    a, b, c = h_gen(OM2, "a"), h_gen(OM2, "b"), h_comm_gen(OM2, "a", "b")
    assert reps.is_quadratic_element(a, V)
    assert reps.is_quadratic_element(c, V)
    assert not reps.is_quadratic_element(h_mul(a, b), V)
    assert not reps.is_quadratic_element(c2.h_identity(OM2), V)
    assert reps.is_quadratic_subgroup([a, c], V)
    assert not reps.is_quadratic_subgroup([a, b], V)
    with pytest.raises(ValueError):
        reps.is_quadratic_subgroup([], V)


def test_module_shape_check():
    V = reps.MatrixModule(4)
    with pytest.raises(ValueError):
        V.matrix(gfp.identity(3))


def test_stacked_module_fixed_space():
    blocks = np.stack([c2.V1_A, c2.V1_B])
    V = reps.MatrixModule(6)
    assert V.fixed_space_dim([blocks]) == 4
    basis = V.fixed_space([blocks])
    assert basis.shape == (4, 6)


@pytest.fixture(scope="module")
def mini():
    G = c2.SemidirectGroup(OM4)
    return reps.BlockModule(G)


def test_mini_dimension(mini):
    assert mini.nblocks == 24
    assert mini.dim == 216


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 3 ** 10 - 1), st.integers(0, 3 ** 10 - 1))
def test_block_module_homomorphism(x, y):
    G = c2.SemidirectGroup(OM4)
    V = reps.BlockModule(G)
    rows = c2.all_elements(OM4)
    a, b = c2.from_coords(OM4, rows[x]), c2.from_coords(OM4, rows[y])
    lhs = V.operator(a).compose(V.operator(b))
    assert lhs == V.operator(h_mul(a, b))


def test_mini_fixed_dims_match_dense(mini, rng):
    rows = c2.all_elements(OM4)
    for _ in range(5):
        gens = [c2.from_coords(OM4, rows[int(rng.integers(len(rows)))]) for _ in range(2)]
        dense = np.hstack([gfp.mat_sub(mini.dense_matrix(g), gfp.identity(216)) for g in gens])
        assert mini.fixed_space_dim(gens) == 216 - gfp.rank(dense)


def test_coupled_fixed_dim_matches_dense(rng):
    G = c2.SemidirectGroup(OM4, {"s": c2.perm_from_cycles(4, [[0, 1, 2]])})
    V = reps.BlockModule(G)
    for _ in range(3):
        g = c2.GElement(c2.random_h(OM4, rng), G.q_gens["s"])
        h = G.random_h(rng)
        dense = np.hstack([gfp.mat_sub(V.dense_matrix(x), gfp.identity(216)) for x in (g, h)])
        assert V.fixed_space_dim([g, h]) == 216 - gfp.rank(dense)
    small = reps.BlockModule(G, cycle_bound=2)
    with pytest.raises(reps.CouplingError):
        small.fixed_space_dim([G.qel("s")])


def test_square_minus_one_matches_dense(rng):
    G = c2.SemidirectGroup(OM4, {"s": c2.perm_from_cycles(4, [[0, 1, 2]])})
    V = reps.BlockModule(G)
    g = c2.GElement(c2.random_h(OM4, rng), G.q_gens["s"])
    n = gfp.mat_sub(V.dense_matrix(g), gfp.identity(216))
    sq = gfp.mat_mul(n, n)
    blocks = V.square_minus_one(g)
    rebuilt = np.zeros_like(sq)
    for (s, t), m in blocks.items():
        rebuilt[s * 9:(s + 1) * 9, t * 9:(t + 1) * 9] = m
    assert np.array_equal(rebuilt, sq)
    assert V.is_quadratic_element(g) == (gfp.is_zero(sq) and not gfp.is_zero(n))


def test_mini_E0_quadratic(mini):
    a = h_gen(OM4, "a")
    gens = [a] + [h_comm_gen(OM4, "a", x) for x in "bcd"]
    assert reps.is_quadratic_subgroup(gens, mini)
    assert mini.is_quadratic_element(h_comm_gen(OM4, "b", "c"))
    # a commutator in each tensor factor squares to a nonzero map
    assert not mini.is_quadratic_element(h_mul(h_comm_gen(OM4, "a", "b"), h_comm_gen(OM4, "c", "d")))


# -- the 27216-dimensional module ----------------------------------------------


def test_v0_dimension(V0):
    assert V0.nblocks == 9 * 8 * 7 * 6
    assert V0.dim == 27216


def test_v0_block_permutation(G, V0):
    sx = G.q_gens["sigma_x"]
    perm = V0.block_perm(sx)
    assert sorted(perm.tolist()) == list(range(V0.nblocks))
    t = V0.block_of(("x1", "x2", "y1", "z1"))
    assert V0.label(int(perm[t])) == "(x2,x3,y1,z1)"


def test_v0_homomorphism_sampled(G, V0, rng):
    for _ in range(4):
        a, b = G.random(rng), G.random(rng)
        assert V0.operator(a).compose(V0.operator(b)) == V0.operator(c2.g_mul(a, b))


def test_x1_is_quadratic(G, V0):
    x1 = h_gen(G.omega, "x1")
    assert V0.is_quadratic_element(x1)
    assert not V0.is_trivial_element(x1)


def test_central_witness_value(G, V0):
    el = c2.lemma42_elements(G)
    z = h_mul(el["c1"], el["c2"])
    t = V0.block_of(("x1", "x2", "y1", "z1"))
    n = gfp.mat_sub(V0.local_matrices(z)[t], gfp.identity(9))
    sq = gfp.mat_mul(n, n)
    P = c2.pair_projections(z)
    ix = G.omega.index
    r = int(P[ix["x1"], ix["x2"]][0, 2]) * int(P[ix["y1"], ix["z1"]][0, 2]) % 3
    assert r != 0
    assert np.argwhere(sq).tolist() == [[0, 8]]
    assert sq[0, 8] == (2 * r) % 3
    assert V0.quadratic_witness(z) is not None


def test_block_vector_apply(G, V0, rng):
    g = G.random(rng)
    op = V0.operator(g)
    dense = np.zeros((V0.nblocks, 9), dtype=np.uint8)
    dense[[3, 100, 2000]] = rng.integers(0, 3, (3, 9))
    sparse = reps.BlockVector.from_dense(dense)
    assert np.array_equal(sparse.apply(op).to_dense(), op.apply(dense))
    assert np.array_equal((sparse + sparse).to_dense(), gfp.mat_add(dense, dense))
