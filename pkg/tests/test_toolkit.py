import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakclosure import class2 as c2
from weakclosure import gfp, reps
from weakclosure import toolkit as tk
from weakclosure.class2 import V1_A, V1_B, V1_C


@pytest.fixture(scope="module")
def E27():
    return tk.extraspecial_instance()


@pytest.fixture(scope="module")
def eas27(E27):
    return tk.elementary_abelians(E27.G)


def sub(G, *mats):
    return G.subgroup([G.index_of(m) for m in mats])


def test_enumerate_extraspecial(E27):
    G = E27.G
    assert G.order == 27
    assert G.index_of(gfp.identity(3)) == 0
    assert len(G.centre()) == 3
    assert G.index_of(V1_C) in G.centre()
    assert G.comm(G.index_of(V1_A), G.index_of(V1_B)) == G.index_of(V1_C)
    for i in range(G.order):
        assert G.mul(i, G.inv(i)) == 0


def test_enumerate_checks():
    with pytest.raises(ValueError):
        tk.enumerate_group([gfp.as_f3([[1, 1], [1, 1]])])
    with pytest.raises(ValueError):
        tk.enumerate_group([gfp.identity(2), gfp.identity(3)])
    with pytest.raises(tk.BudgetExceeded):
        tk.enumerate_group([V1_A, V1_B], cap=10)
    with pytest.raises(KeyError):
        tk.extraspecial_instance().G.index_of(gfp.as_f3([[1, 2, 0], [0, 1, 0], [0, 0, 2]]))


def test_trivial_group():
    T = tk.trivial_group(3)
    assert T.order == 1
    assert tk.elementary_abelians(T).subgroups == []


def test_elementary_abelians(E27, eas27):
    assert eas27.complete
    orders = [S.order for S in eas27.subgroups]
    assert orders.count(3) == 13
    assert orders.count(9) == 4
    assert len(tk.order3_elements(E27.G)) == 26


def test_jvalues(E27):
    G, V = E27.G, E27.module
    assert tk.jlog_of(G, sub(G, V1_A, V1_C), V).log3 == 1
    assert tk.jlog_of(G, sub(G, V1_B, V1_C), V).log3 == 0
    assert tk.jlog_of(G, sub(G, V1_C), V).log3 == 0
    assert tk.jlog_of(G, G.whole(), V).log3 == 1


def test_quadratic_elements(E27):
    G, V = E27.G, E27.module
    expected = (sub(G, V1_A, V1_C).elements | sub(G, V1_B, V1_C).elements) - {0}
    assert tk.quadratic_elements(G, V) == expected
    assert tk.central_quadratics(G, V) == [G.index_of(V1_C), G.index_of(gfp.mat_pow(V1_C, 2))]


def test_offenders(E27, eas27):
    reports = tk.offenders(E27.G, E27.module, eas27)
    names = sorted((r.subgroup.order, r.jvalue.log3) for r in reports)
    assert (9, 1) in names
    assert all(r.jvalue.is_offender for r in reports)
    assert tk.every_offender_contains_best(reports)


def test_tripled_has_no_offenders():
    inst = tk.tripled_instance()
    assert tk.offenders(inst.G, inst.module) == []


def test_timmesfeld(E27, eas27):
    G, V = E27.G, E27.module
    res = tk.timmesfeld_check(G, sub(G, V1_A, V1_C), V, eas27)
    assert res.passed
    assert res.detail["jF"] == res.detail["jE"] == 1


def test_ms_equality_case(E27):
    G, V = E27.G, E27.module
    res = tk.ms_check(G, sub(G, V1_A, V1_C), sub(G, V1_B, V1_C), V)
    assert res.inequality_ok and res.equality
    assert res.product_condition and res.fixed_condition
    assert res.consistent


def test_ms_strict_case(E27):
    G, V = E27.G, E27.module
    res = tk.ms_check(G, sub(G, V1_A), sub(G, V1_B), V)
    assert res.inequality_ok
    assert res.consistent


def test_descent_and_perp(E27):
    G, V = E27.G, E27.module
    a, b, c = (G.index_of(m) for m in (V1_A, V1_B, V1_C))
    assert tk.descent_check(G, a, b, V) == "pass"
    assert tk.descent_check(G, a, c, V) == "skipped"
    for x, y in itertools.product(range(G.order), repeat=2):
        assert tk.perp(G, x, y, V) == tk.perp(G, y, x, V)
    assert tk.perp(G, a, c, V)
    assert not tk.perp(G, a, b, V)


def test_no_rank_one_unmet(E27, eas27):
    assert tk.no_rank_one_check(E27.G, E27.module, eas27) == "unmet"


def test_weak_closure_bruteforce(E27):
    G = E27.G
    closed, _ = tk.weak_closure_bruteforce(G, sub(G, V1_A, V1_C))
    assert closed
    closed, g = tk.weak_closure_bruteforce(G, sub(G, V1_A))
    assert not closed and g is not None


def test_hypothesis_na_unmet(E27, eas27):
    G, V = E27.G, E27.module
    for N, A in tk.na_candidates(G):
        res = tk.hypothesis_na_check(G, N, A, V, eas27)
        assert res.status == "unmet"
        assert res.conditions["no_central_quadratics"] is False


def test_subgroup_helpers(E27):
    G = E27.G
    whole = G.whole()
    assert whole.order == 27 and whole.log3_order == 3
    D = G.commutator_subgroup(whole, whole)
    assert D.elements == frozenset(G.centre())
    assert G.is_normal(D) and G.is_abelian(D)
    A = sub(G, V1_A, V1_C)
    assert G.centraliser(A).elements == A.elements
    assert A <= whole


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 26), min_size=1, max_size=3))
def test_generator_pair_criterion(ids):
    # [V, E, E] = 0 on generators iff it holds on every pair of elements
    inst = tk.extraspecial_instance()
    G, V = inst.G, inst.module
    S = G.subgroup(ids)
    if not G.is_abelian(S) or S.order == 1:
        return
    on_gens = tk.is_quadratic_sub(G, S, V)
    on_all = all(V.pair_annihilates(G.module_element(x), G.module_element(y))
                 for x in S.elements for y in S.elements)
    assert on_gens == on_all


def test_generator_pair_criterion_on_v2(rng):
    om = c2.omega_of_size(4)
    V = reps.v2_module(om)
    for _ in range(10):
        gens = [c2.random_h(om, rng, central=bool(k)) for k in range(2)]
        if not c2.h_comm(*gens).is_identity():
            continue
        E = c2.ElementaryAbelianSubgroup(gens)
        on_gens = reps.is_quadratic_subgroup(gens, V)
        els = E.elements()
        on_all = all(V.pair_annihilates(x, y) for x in els for y in els)
        assert on_gens == on_all


def test_sym2_is_homomorphism(rng):
    a, b = tk.random_unitriangular(rng, 3), tk.random_unitriangular(rng, 3)
    assert np.array_equal(tk.sym2_matrix(gfp.mat_mul(a, b)),
                          gfp.mat_mul(tk.sym2_matrix(a), tk.sym2_matrix(b)))
    assert tk.sym2_matrix(a).shape == (6, 6)


def test_pack_keys_distinct(rng):
    stack = rng.integers(0, 3, (200, 4, 4)).astype(np.uint8)
    keys = tk.pack_keys(stack)
    uniq = {bytes(m) for m in stack}
    assert len(np.unique(keys)) == len(uniq)


# -- the mini instance ----------------------------------------------------------------


@pytest.fixture(scope="module")
def mini_table():
    return tk.Class2Table(c2.omega_of_size(4))


def test_class2_table(mini_table, rng):
    T = mini_table
    assert T.order == 3 ** 10
    inv = T.inverses()
    ids = rng.integers(T.order, size=500)
    assert np.all(T.mul_many(ids, inv[ids]) == 0)
    for i in ids[:50]:
        h = T.element(int(i))
        assert T.index_of(c2.h_inv(h)) == inv[i]


def test_engine_agreement_small(mini_table, rng):
    om = mini_table.omega
    V = reps.BlockModule(c2.SemidirectGroup(om))
    images = [V.local_matrices(c2.h_gen(om, x)) for x in om.labels]
    res = tk.engine_agreement(mini_table, images, rng, 300)
    assert res["products"] == res["commutators"] == res["conjugations"] == 300
    assert res["first_mismatch"] is None


def test_evaluate_many_matches_evaluate(mini_table, rng):
    om = mini_table.omega
    images = [c2.projection_f(c2.h_gen(om, x), ("b", "d")) for x in om.labels]
    runs = tk.word_factor_table(om, images)
    ids = rng.integers(mini_table.order, size=30)
    got = tk.evaluate_many(mini_table.rows[ids], runs)
    for k, i in enumerate(ids):
        assert np.array_equal(got[k], c2.evaluate(mini_table.element(int(i)), images))


def test_block_flags_match_module(mini_table, rng):
    om = mini_table.omega
    V = reps.BlockModule(c2.SemidirectGroup(om))
    ids = rng.integers(mini_table.order, size=200)
    triv, sq0 = tk.block_flags(V, mini_table.rows[ids])
    for k, i in enumerate(ids):
        h = mini_table.element(int(i))
        assert triv[k] == V.is_trivial_element(h)
        assert sq0[k] == (V.quadratic_witness(h) is None)


def test_random_instances_are_seeded():
    a = [(inst.name if inst else None, why) for inst, why in tk.random_instances(np.random.default_rng(3), 6)]
    b = [(inst.name if inst else None, why) for inst, why in tk.random_instances(np.random.default_rng(3), 6)]
    assert a == b
