"""Claim runner and the three verification suites.

A suite is an ordered list of named claims. Every claim gets its own random
generator, seeded from the run seed and a checksum of the claim id, so the
report does not depend on how claims are scheduled across threads.
"""

from __future__ import annotations

import json
import threading
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import gfp, toolkit as tk
from .class2 import (
    SemidirectGroup,
    V1_A,
    V1_B,
    V1_C,
    build_E,
    center_of_G,
    g_conj,
    g_mul,
    g_pow,
    h_comm,
    h_comm_gen,
    h_gen,
    h_mul,
    h_pow,
    h_to_text,
    lemma42_elements,
    lemma42_identities,
    log_coords,
    main_group,
    omega_of_size,
    orbit_size,
    pair_projections,
    projection_f,
    q_act,
    random_h,
    weak_closure_structural,
)
from .reps import BlockModule, CouplingError, MatrixModule, is_quadratic_subgroup, jlog

SCHEMA = "weakclosure-report/1"


@dataclass
class Config:
    seed: int = 0
    omega_size: int = 9
    jobs: int = 1
    max_rank: int = 4
    max_subgroups: int = 10 ** 6
    cycle_bound: int = 81
    timings: bool = False

    def public(self) -> dict:
        return {"seed": self.seed, "omega_size": self.omega_size, "max_rank": self.max_rank,
                "max_subgroups": self.max_subgroups, "cycle_bound": self.cycle_bound}


@dataclass
class Claim:
    id: str
    status: str  # pass, fail, budget
    detail: dict = field(default_factory=dict)
    witness: object = None
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self, timings: bool) -> dict:
        out = {"id": self.id, "status": self.status, "detail": self.detail, "witness": self.witness}
        if timings:
            out["seconds"] = round(self.seconds, 3)
        return out


@dataclass
class VerificationReport:
    command: str
    config: Config
    claims: list[Claim]

    def counts(self) -> dict:
        out = {"pass": 0, "fail": 0, "budget": 0, "vacuous": 0}
        for c in self.claims:
            out[c.status] += 1
            out["vacuous"] += int(c.detail.get("vacuous", 0)) if isinstance(c.detail, dict) else 0
        return out

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.claims)

    def exit_code(self) -> int:
        if any(c.status == "fail" for c in self.claims):
            return 1
        if any(c.status == "budget" for c in self.claims):
            return 2
        return 0

    def to_json(self) -> str:
        doc = {
            "schema": SCHEMA,
            "command": self.command,
            "config": self.config.public(),
            "claims": [c.to_json(self.config.timings) for c in self.claims],
            "summary": self.counts(),
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"

    def summary_lines(self) -> list[str]:
        lines = []
        for c in self.claims:
            extra = ""
            if "vacuous" in c.detail:
                extra = f"  (exercised {c.detail.get('exercised', 0)}, vacuous {c.detail['vacuous']})"
            lines.append(f"[{c.status.upper():6}] {c.id:38} {c.seconds:7.2f}s{extra}")
        n = self.counts()
        lines.append(f"{n['pass']} passed, {n['fail']} failed, {n['budget']} over budget")
        return lines


def claim_rng(seed: int, claim_id: str) -> np.random.Generator:
    return np.random.default_rng([seed & (2 ** 64 - 1), zlib.crc32(claim_id.encode())])


def _run_one(claim_id: str, fn, cfg: Config, ctx) -> Claim:
    rng = claim_rng(cfg.seed, claim_id)
    t0 = time.perf_counter()
    try:
        passed, detail, witness = fn(ctx, rng, cfg)
        status = "pass" if passed else "fail"
    except (tk.BudgetExceeded, CouplingError) as exc:
        status, detail, witness = "budget", {"reason": str(exc)}, None
    except Exception as exc:  # a crash inside a check counts against the claim
        status, detail, witness = "fail", {"error": f"{type(exc).__name__}: {exc}"}, None
    return Claim(claim_id, status, _plain(detail), _plain(witness), time.perf_counter() - t0)


def run_claims(command: str, claims, ctx, cfg: Config) -> VerificationReport:
    # the fault switch is module-global; threads inherit it as-is
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_run_one, cid, fn, cfg, ctx) for cid, fn in claims]
            results = [f.result() for f in futures]
    else:
        results = [_run_one(cid, fn, cfg, ctx) for cid, fn in claims]
    return VerificationReport(command, cfg, results)


def _plain(x):
    """JSON-safe copy (numpy scalars and arrays, tuples, sets)."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_plain(v) for v in x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# -- main construction ------------------------------------------------------------


class MainContext:
    """Lazily built objects shared by the claims about G and V0."""

    def __init__(self, cfg: Config):
        self.G = main_group()
        self.omega = self.G.omega
        self.V0 = BlockModule(self.G, cycle_bound=cfg.cycle_bound)
        self.E = build_E(self.G)
        self.special = lemma42_elements(self.G)


def c_order_accounting(ctx: MainContext, rng, cfg):
    detail = {}
    ok = True
    for n in (2, 4, 9):
        om = omega_of_size(n)
        expected = n * (n + 1) // 2
        detail[f"log3_E_omega{n}"] = om.log3_order
        ok &= om.log3_order == expected == om.n + om.npairs
    # detection: h = 1 iff every pair projection is the identity
    for n in (2, 4, 9):
        om = omega_of_size(n)
        misses = 0
        for _ in range(200):
            h = random_h(om, rng)
            trivial = bool(np.all(pair_projections(h)[~np.eye(n, dtype=bool)] == gfp.identity(3)))
            misses += trivial != h.is_identity()
        detail[f"detection_misses_omega{n}"] = misses
        ok &= misses == 0
    detail["order_Q"] = len(ctx.G.Q)
    detail["log3_G"] = ctx.G.log3_order
    ok &= ctx.G.log3_order == 49 and len(ctx.G.Q) == 81
    return ok, detail, None


def c_projection_homomorphism(ctx: MainContext, rng, cfg):
    om = ctx.omega
    bad = None
    n = 300
    for _ in range(n):
        a, b = random_h(om, rng), random_h(om, rng)
        pa, pb, pab = pair_projections(a), pair_projections(b), pair_projections(h_mul(a, b))
        off = ~np.eye(om.n, dtype=bool)
        if not np.array_equal(gfp.mat_mul(pa, pb)[off], pab[off]):
            bad = [h_to_text(a), h_to_text(b)]
            break
    spot = {
        "f(x1) on (x1,x2)": np.array_equal(projection_f(h_gen(om, "x1"), ("x1", "x2")), V1_A),
        "f(x2) on (x1,x2)": np.array_equal(projection_f(h_gen(om, "x2"), ("x1", "x2")), V1_B),
        "f([x1,x2]) on (x1,x2)": np.array_equal(projection_f(h_comm_gen(om, "x1", "x2"), ("x1", "x2")), V1_C),
        "f(y3) on (x1,x2)": np.array_equal(projection_f(h_gen(om, "y3"), ("x1", "x2")), gfp.identity(3)),
    }
    ok = bad is None and all(spot.values())
    return ok, {"pairs": n, **spot}, bad


def c_exponent_class(ctx: MainContext, rng, cfg):
    G = ctx.G
    om = ctx.omega
    n = 200
    cube = comm_central = bilinear = True
    max_order = 1
    for _ in range(n):
        g = G.random(rng)
        order = 1
        while not g_pow(g, order).is_identity() and order < 3 ** 5:
            order *= 3
        max_order = max(max_order, order)
        a, b, c = (random_h(om, rng) for _ in range(3))
        cube &= h_pow(a, 3).is_identity() and h_mul(a, h_mul(a, a)).is_identity()
        comm = h_comm(a, b)
        comm_central &= comm.is_central() and all(c == 0 for c in comm.u)
        bilinear &= h_comm(a, h_mul(b, c)) == h_mul(h_comm(a, b), h_comm(a, c))
        bilinear &= h_comm(h_mul(a, b), c) == h_mul(h_comm(a, c), h_comm(b, c))
    # H has exponent 3; Q contains elements of order 9
    ok = cube and comm_central and bilinear and max_order <= 27
    return ok, {"samples": n, "H_exponent_3": cube, "commutators_central": comm_central,
                "bilinear": bilinear, "max_sampled_order_G": max_order}, None


def c_q_automorphism(ctx: MainContext, rng, cfg):
    G = ctx.G
    om = ctx.omega
    if len(G.Q) != 81:
        return False, {"order_Q": len(G.Q)}, None
    bad = None
    for q in G.Q:
        for _ in range(3):
            a, b = random_h(om, rng), random_h(om, rng)
            if q_act(h_mul(a, b), q) != h_mul(q_act(a, q), q_act(b, q)):
                bad = str(q)
                break
        if bad:
            break
    x1 = G.gen("x1")
    spot = {
        "x1^sigma_x = x2": g_conj(x1, G.qel("sigma_x")) == G.gen("x2"),
        "x1^tau = y1": g_conj(x1, G.qel("tau")) == G.gen("y1"),
        "x1^sigma_y = x1": g_conj(x1, G.qel("sigma_y")) == x1,
    }
    # conjugation by q agrees with q_act
    agree = all(g_conj(G.embed(h), G.qel(q)) == G.embed(q_act(h, q))
                for q in G.q_gens.values() for h in (random_h(om, rng) for _ in range(5)))
    ok = bad is None and all(spot.values()) and agree and len(G.Q) == 81
    return ok, {"order_Q": len(G.Q), "conj_matches_q_act": agree, **spot}, bad


def c_center(ctx: MainContext, rng, cfg):
    basis = center_of_G(ctx.G)
    width = ctx.omega.log3_order
    rows = np.array([log_coords(z) for z in basis], dtype=gfp.DTYPE).reshape(len(basis), width)
    c1, c2 = ctx.special["c1"], ctx.special["c2"]
    inside = {k: bool(rows.shape[0] and gfp.in_row_space(log_coords(ctx.special[k]), rows))
              for k in ("c1", "c2")}
    invariant = all(q_act(c, q) == c for c in (c1, c2) for q in ctx.G.q_gens.values())
    om = ctx.omega
    sizes = {"orbit_[x1,x2]": orbit_size(h_comm_gen(om, "x1", "x2"), ctx.G.Q),
             "orbit_[x1,y1]": orbit_size(h_comm_gen(om, "x1", "y1"), ctx.G.Q),
             "support_c1": sum(1 for x in c1.c if x), "support_c2": sum(1 for x in c2.c if x)}
    independent = gfp.rank(np.vstack([log_coords(c1), log_coords(c2)])) == 2
    ok = (len(basis) == 2 and all(inside.values()) and invariant and independent
          and sizes == {"orbit_[x1,x2]": 9, "orbit_[x1,y1]": 27, "support_c1": 9, "support_c2": 27})
    return ok, {"rank": len(basis), "contains": inside, "q_invariant": invariant,
                "c1_c2_independent": independent, **sizes,
                "basis": [h_to_text(z) for z in basis]}, None


def c_lemma42(ctx: MainContext, rng, cfg):
    res = lemma42_identities(ctx.G, rng, samples=30)
    return res.passed, res.detail, res.witness


def c_v0_dimension(ctx: MainContext, rng, cfg):
    V0 = ctx.V0
    n = ctx.omega.n
    ok = V0.nblocks == n * (n - 1) * (n - 2) * (n - 3) == 3024 and V0.dim == 27216
    return ok, {"blocks": V0.nblocks, "dim": V0.dim}, None


def c_v0_homomorphism(ctx: MainContext, rng, cfg):
    G, V0 = ctx.G, ctx.V0
    n = 40
    bad = None
    for _ in range(n):
        a, b = G.random(rng), G.random(rng)
        if V0.operator(g_mul(a, b)) != V0.operator(a).compose(V0.operator(b)):
            bad = [str(a), str(b)]
            break
    ident = V0.operator(G.identity()).is_identity()
    sx = V0.operator(G.qel("sigma_x"))
    pure_perm = (not sx.is_block_diagonal()) and bool(np.all(sx.local == gfp.identity(9)))
    return bad is None and ident and pure_perm, {"pairs": n, "identity_operator": ident,
                                                 "sigma_x_pure_permutation": pure_perm}, bad


def _central_elements(ctx: MainContext):
    c1, c2 = ctx.special["c1"], ctx.special["c2"]
    for i in range(3):
        for j in range(3):
            if (i, j) != (0, 0):
                yield i, j, h_mul(h_pow(c1, i), h_pow(c2, j))


def _expected_block(i: int, j: int):
    if j == 0:
        return ("x1", "x2", "y1", "y2")
    if i == 0:
        return ("x1", "y1", "x2", "y2")
    return ("x1", "x2", "y1", "z1")


def c_faithful(ctx: MainContext, rng, cfg):
    V0 = ctx.V0
    detail = {}
    ok = True
    for i, j, z in _central_elements(ctx):
        op = V0.operator(z)
        moved = np.nonzero(np.any((op.local != gfp.identity(9)).reshape(V0.nblocks, -1), axis=1))[0]
        detail[f"c1^{i} c2^{j}"] = {"nontrivial_blocks": int(moved.size),
                                    "first": V0.label(int(moved[0])) if moved.size else None}
        ok &= moved.size > 0
    return ok, detail, None


def c_no_central_quadratics(ctx: MainContext, rng, cfg):
    V0 = ctx.V0
    om = ctx.omega
    detail = {}
    ok = True
    bad = None
    for i, j, z in _central_elements(ctx):
        name = f"c1^{i} c2^{j}"
        found = V0.quadratic_witness(z)
        blk = _expected_block(i, j)
        t = V0.block_of(blk)
        nmat = gfp.mat_sub(V0.local_matrices(z)[t], gfp.identity(9))
        sq = gfp.mat_mul(nmat, nmat)
        P = pair_projections(z)
        a, b, c, d = (om.pos(x) for x in blk)
        r = int(P[a, b][0, 2]) * int(P[c, d][0, 2]) % 3
        # row e1(x)e1 goes to 2r e3(x)e3: the transpose of the column-vector statement
        nonzero = np.argwhere(sq).tolist()
        exact = r != 0 and nonzero == [[0, 8]] and int(sq[0, 8]) == (2 * r) % 3
        detail[name] = {
            "witness_block": "(" + ",".join(blk) + ")",
            "r": r,
            "entry_e1e1_to_e3e3": int(sq[0, 8]),
            "exact_witness": exact,
            "first_witness_block": None if found is None else V0.label(found[0]),
            "first_witness_row": None if found is None else int(found[1]),
            "first_witness_image": None if found is None else gfp.format_vector(found[2]).strip(),
        }
        if found is None or not exact:
            ok = False
            bad = bad or name
    return ok, detail, bad


def c_E_rank(ctx: MainContext, rng, cfg):
    E = ctx.E
    central = E.central_part().shape[0]
    return E.order_log3 == 9 and central == 8, {"rank": E.order_log3, "rank_E_meet_Hprime": central,
                                                "generators": [h_to_text(g) for g in E.gens]}, None


def c_E_quadratic(ctx: MainContext, rng, cfg):
    V0 = ctx.V0
    gens = ctx.E.gens
    bad = [[h_to_text(a), h_to_text(b)] for a in gens for b in gens if not V0.pair_annihilates(a, b)]
    return not bad, {"pairs_checked": len(gens) ** 2, "pairs_failing": len(bad)}, bad[:1] or None


def c_x1_quadratic(ctx: MainContext, rng, cfg):
    V0 = ctx.V0
    x1 = h_gen(ctx.omega, "x1")
    t = V0.block_of(("x1", "x2", "y1", "y2"))
    nontrivial_on_block = not np.array_equal(V0.local_matrices(x1)[t], gfp.identity(9))
    quad = V0.is_quadratic_element(x1)
    return quad and nontrivial_on_block, {"quadratic": quad,
                                          "nontrivial_on_(x1,x2,y1,y2)": nontrivial_on_block}, None


def c_weak_closure(ctx: MainContext, rng, cfg):
    res = weak_closure_structural(ctx.G, ctx.E, rng, samples=100)
    return res.passed, res.detail, res.witness


def c_nonoffending(ctx: MainContext, rng, cfg):
    V0 = ctx.V0
    fixed = V0.fixed_space_dim(ctx.E.gens)
    j = jlog(ctx.E.gens, ctx.E.order_log3, V0)
    return j.log3 <= -1, {"dim_V0": V0.dim, "dim_C_V0(E)": fixed, "rank_E": ctx.E.order_log3,
                          "jlog": j.log3}, None


MAIN_CLAIMS = [
    ("lemma4.1-order-accounting", c_order_accounting),
    ("lemma4.1-projection-homomorphism", c_projection_homomorphism),
    ("lemma4.1-exponent-class", c_exponent_class),
    ("sec4-q-automorphism", c_q_automorphism),
    ("lemma4.2.1-center", c_center),
    ("lemma4.2-identities", c_lemma42),
    ("v0-dimension", c_v0_dimension),
    ("v0-homomorphism", c_v0_homomorphism),
    ("thm5.3.1-faithful", c_faithful),
    ("thm5.3.1-no-central-quadratics", c_no_central_quadratics),
    ("thm5.3.2-E-rank", c_E_rank),
    ("thm5.3.2-weak-closure", c_weak_closure),
    ("thm5.3.3-E-quadratic", c_E_quadratic),
    ("thm5.3-x1-quadratic", c_x1_quadratic),
    ("thm5.3-nonoffending-E", c_nonoffending),
]


def verify_main(cfg: Config) -> VerificationReport:
    return run_claims("verify", MAIN_CLAIMS, MainContext(cfg), cfg)


# -- E(a, b) on V1 ----------------------------------------------------------------


def brute_fixed_dim(mats) -> int:
    """dim of {v : v m = v for all m}, by listing every vector of F_3^d."""
    d = mats[0].shape[0]
    vecs = np.array(list(np.ndindex(*(3,) * d)), dtype=np.int64)
    ok = np.ones(len(vecs), dtype=bool)
    for m in mats:
        ok &= np.all((vecs @ m.astype(np.int64)) % 3 == vecs, axis=1)
    count = int(ok.sum())
    k = tk._log3(count)
    assert k is not None
    return k


class SmallContext:
    def __init__(self, cfg: Config):
        self.cfg = cfg
        self.ext = tk.extraspecial_instance()
        G, M = self.ext.G, self.ext.module
        self.eas = tk.elementary_abelians(G, cfg.max_rank, cfg.max_subgroups)
        self.offs = tk.offenders(G, M, self.eas)
        self.a, self.b, self.c = (G.index_of(m) for m in (V1_A, V1_B, V1_C))
        self._instances = None
        self._na = None
        self.lock = threading.RLock()

    def instances(self):
        """The E(a, b) instance, the tripled one and the seeded random ones."""
        with self.lock:
            return self._build_instances()

    def _build_instances(self):
        if self._instances is None:
            rng = claim_rng(self.cfg.seed, "instances")
            found, skipped = [self.ext, tk.tripled_instance()], []
            for inst, reason in tk.random_instances(rng, self.cfg_count()):
                if inst is None:
                    skipped.append(reason)
                else:
                    found.append(inst)
            self._instances = (found, skipped)
        return self._instances

    def cfg_count(self) -> int:
        return 12


def o_quadratic_elements(ctx: SmallContext, rng, cfg):
    G, M = ctx.ext.G, ctx.ext.module
    q = tk.quadratic_elements(G, M)
    AC, BC = G.subgroup([ctx.a, ctx.c]), G.subgroup([ctx.b, ctx.c])
    expected = (AC.elements | BC.elements) - {G.identity}
    return q == expected, {"quadratic": len(q), "expected": len(expected)}, None


def o_jvalues(ctx: SmallContext, rng, cfg):
    G, M = ctx.ext.G, ctx.ext.module
    subs = {"<a,c>": G.subgroup([ctx.a, ctx.c]), "<b,c>": G.subgroup([ctx.b, ctx.c]),
            "<c>": G.subgroup([ctx.c]), "G": G.whole()}
    got = {k: tk.jlog_of(G, S, M).log3 for k, S in subs.items()}
    want = {"<a,c>": 1, "<b,c>": 0, "<c>": 0, "G": 1}
    brute = {k: brute_fixed_dim([G.elements[i] for i in S.gens]) for k, S in subs.items()}
    fixed = {k: tk.fixed_dim_of(G, S, M) for k, S in subs.items()}
    kern = {"a": gfp.kernel_basis(gfp.mat_sub(V1_A, gfp.identity(3))).shape[0],
            "abc": gfp.kernel_basis(np.hstack([gfp.mat_sub(m, gfp.identity(3))
                                               for m in (V1_A, V1_B, V1_C)])).shape[0]}
    ok = got == want and brute == fixed and kern == {"a": 2, "abc": 1}
    return ok, {"jlog": got, "fixed_dims": fixed, "fixed_dims_bruteforce": brute, "kernel_dims": kern}, None


def o_ms_equality(ctx: SmallContext, rng, cfg):
    G, M = ctx.ext.G, ctx.ext.module
    r = tk.ms_check(G, G.subgroup([ctx.a, ctx.c]), G.subgroup([ctx.b, ctx.c]), M)
    ok = r.inequality_ok and r.equality and r.product_condition and r.fixed_condition
    return ok, {"equality": r.equality, "HK_is_join": r.product_condition,
                "fixed_spaces_add": r.fixed_condition}, None


def o_offenders(ctx: SmallContext, rng, cfg):
    G, M = ctx.ext.G, ctx.ext.module
    ac = G.subgroup([ctx.a, ctx.c]).elements
    by_set = {r.subgroup.elements: r for r in ctx.offs}
    ok = ac in by_set and by_set[ac].jvalue.log3 == 1 and tk.every_offender_contains_best(ctx.offs)
    return ok, {
        "elementary_abelian_subgroups": len(ctx.eas.subgroups),
        "enumeration_complete": ctx.eas.complete,
        "offenders": len(ctx.offs),
        "best": sum(r.is_best for r in ctx.offs),
        "quadratic_offenders": sum(r.is_quadratic for r in ctx.offs),
        "<a,c>_jlog": by_set[ac].jvalue.log3 if ac in by_set else None,
        "every_offender_contains_best": tk.every_offender_contains_best(ctx.offs),
    }, None


def o_tripled(ctx: SmallContext, rng, cfg):
    inst = tk.tripled_instance()
    offs = tk.offenders(inst.G, inst.module, max_rank=cfg.max_rank, max_subgroups=cfg.max_subgroups)
    return not offs, {"order": inst.G.order, "offenders": len(offs)}, None


def o_weak_closure(ctx: SmallContext, rng, cfg):
    G = ctx.ext.G
    AC = G.subgroup([ctx.a, ctx.c])
    closed, _ = tk.weak_closure_bruteforce(G, AC)
    normal = G.is_normal(AC)
    # <a> is not: its conjugate <ac> commutes with it
    a_closed, g = tk.weak_closure_bruteforce(G, G.subgroup([ctx.a]))
    ok = closed and normal and not a_closed
    return ok, {"<a,c>_weakly_closed": closed, "<a,c>_normal": normal,
                "<a>_weakly_closed": a_closed, "conjugations": G.order}, None


def o_quadratic_criterion(ctx: SmallContext, rng, cfg):
    """Generator-pair test for [V, E, E] = 0 against elementwise quadraticity."""
    checked = mismatch = 0
    for inst in (ctx.ext, tk.tripled_instance()):
        G, M = inst.G, inst.module
        for S in tk.elementary_abelians(G, cfg.max_rank, cfg.max_subgroups).subgroups:
            pairwise = tk.is_quadratic_sub(G, S, M)
            elementwise = all(M.is_quadratic_element(G.elements[e]) for e in S.elements if e != G.identity)
            checked += 1
            mismatch += pairwise != elementwise
    return mismatch == 0, {"subgroups": checked, "mismatches": mismatch}, None


# -- lemma suites on all small instances -------------------------------------------


def _suite_counts() -> dict:
    return {"exercised": 0, "vacuous": 0, "violations": 0}


def l_timmesfeld(ctx: SmallContext, rng, cfg):
    out = _suite_counts()
    witness = None
    found, _ = ctx.instances()
    for inst in found:
        G, M = inst.G, inst.module
        eas = tk.elementary_abelians(G, cfg.max_rank, cfg.max_subgroups)
        best = [r for r in tk.offenders(G, M, eas) if r.is_best]
        if not best:
            out["vacuous"] += 1
            continue
        for r in best:
            res = tk.timmesfeld_check(G, r.subgroup, M, eas)
            out["exercised"] += 1
            if not res.passed:
                out["violations"] += 1
                witness = witness or {"instance": inst.name, "E": list(r.gens), **res.detail}
    return out["violations"] == 0, out, witness


def l_perp(ctx: SmallContext, rng, cfg):
    out = _suite_counts()
    witness = None
    found, _ = ctx.instances()
    for inst in found:
        G, M = inst.G, inst.module
        n = min(G.order, 40)
        ids = rng.choice(G.order, size=n, replace=False)
        for g in ids:
            for h in ids:
                out["exercised"] += 1
                if tk.perp(G, int(g), int(h), M) != tk.perp(G, int(h), int(g), M):
                    out["violations"] += 1
                    witness = witness or {"instance": inst.name, "g": int(g), "h": int(h)}
    G = ctx.ext.G
    spot = tk.perp(G, ctx.c, ctx.a, ctx.ext.module) and tk.perp(G, ctx.a, ctx.c, ctx.ext.module)
    out["c_perp_a"] = spot
    return out["violations"] == 0 and spot, out, witness


def l_no_rank_one(ctx: SmallContext, rng, cfg):
    out = _suite_counts()
    witness = None
    found, _ = ctx.instances()
    for inst in found:
        eas = tk.elementary_abelians(inst.G, 1, cfg.max_subgroups)
        status = tk.no_rank_one_check(inst.G, inst.module, eas)
        if status == "unmet":
            out["vacuous"] += 1
        else:
            out["exercised"] += 1
            if status == "fail":
                out["violations"] += 1
                witness = witness or inst.name
    return out["violations"] == 0, out, witness


def _na_results(ctx: SmallContext, cfg):
    with ctx.lock:
        return _build_na(ctx, cfg)


def _build_na(ctx: SmallContext, cfg):
    if ctx._na is None:
        res = []
        found, skipped = ctx.instances()
        for inst in found:
            G, M = inst.G, inst.module
            if tk.central_quadratics(G, M):
                res.append((inst.name, None))
                continue
            eas = tk.elementary_abelians(G, cfg.max_rank, cfg.max_subgroups)
            offs = tk.offenders(G, M, eas)
            for N, A in tk.na_candidates(G):
                res.append((inst.name, (tk.hypothesis_na_check(G, N, A, M, eas, offs),
                                        tk.normal_abelian_check(G, A, M, offs))))
        ctx._na = (res, skipped)
    return ctx._na


def l_normal_abelian(ctx: SmallContext, rng, cfg):
    out = _suite_counts()
    witness = None
    res, _ = _na_results(ctx, cfg)
    for name, r in res:
        if r is None or r[1] == "unmet":
            out["vacuous"] += 1
        else:
            out["exercised"] += 1
            if r[1] == "fail":
                out["violations"] += 1
                witness = witness or name
    return out["violations"] == 0, out, witness


def _na_suite(ctx: SmallContext, cfg, key: str):
    out = {**_suite_counts(), "hypothesis_unmet": 0, "family_members": 0}
    witness = None
    res, skipped = _na_results(ctx, cfg)
    for name, r in res:
        if r is None or r[0].status == "unmet":
            out["hypothesis_unmet"] += 1
            continue
        na = r[0]
        if na.status == "vacuous":
            out["vacuous"] += 1
            continue
        out["exercised"] += 1
        out["family_members"] += na.n_family
        good = {
            "lemma3.4": na.detail["lemma_j_values"] == na.n_family and na.detail["lemma_structure"] == na.n_family
            and na.detail["best"] == na.n_family,
            "prop3.2": na.detail["weakly_closed"] == 0,
        }[key]
        if not good:
            out["violations"] += 1
            witness = witness or {"instance": name, **na.detail}
    out["instances_over_cap"] = len(skipped)
    return out["violations"] == 0, out, witness


def l_lemma34(ctx, rng, cfg):
    return _na_suite(ctx, cfg, "lemma3.4")


def l_prop32(ctx, rng, cfg):
    return _na_suite(ctx, cfg, "prop3.2")


def l_ms_small(ctx: SmallContext, rng, cfg):
    """Every pair of subgroups of E(a, b), exhaustively."""
    G, M = ctx.ext.G, ctx.ext.module
    subs = {G.subgroup([])}
    for x in range(G.order):
        for y in range(G.order):
            subs.add(G.subgroup([x, y]))
    subs = sorted(subs, key=lambda s: (s.order, sorted(s.elements)))
    out = {"pairs": 0, "equality_cases": 0, "violations": 0}
    for H in subs:
        for K in subs:
            r = tk.ms_check(G, H, K, M)
            out["pairs"] += 1
            out["equality_cases"] += r.equality
            out["violations"] += not r.consistent
    out["subgroups"] = len(subs)
    return out["violations"] == 0, out, None


def l_descent_small(ctx: SmallContext, rng, cfg):
    G, M = ctx.ext.G, ctx.ext.module
    out = {"eligible": 0, "skipped": 0, "violations": 0}
    for a in range(G.order):
        for b in range(G.order):
            r = tk.descent_check(G, a, b, M)
            out["eligible" if r != "skipped" else "skipped"] += 1
            out["violations"] += r == "fail"
    spot = tk.descent_check(G, ctx.a, ctx.b, M) == "pass" and tk.descent_check(G, ctx.a, ctx.a, M) == "skipped"
    return out["violations"] == 0 and spot, out, None


SMALL_CLAIMS = [
    ("oracle-v1-quadratic-elements", o_quadratic_elements),
    ("oracle-v1-jvalues", o_jvalues),
    ("oracle-v1-ms-equality", o_ms_equality),
    ("oracle-v1-offenders", o_offenders),
    ("oracle-v1-tripled-no-offenders", o_tripled),
    ("oracle-v1-weak-closure", o_weak_closure),
    ("oracle-quadratic-criterion", o_quadratic_criterion),
    ("lemma-ms-exhaustive-v1", l_ms_small),
    ("lemma-descent-exhaustive-v1", l_descent_small),
]

LEMMA_CLAIMS = [
    ("lemma-timmesfeld", l_timmesfeld),
    ("lemma-perp-symmetry", l_perp),
    ("lemma3.3-no-rank-one", l_no_rank_one),
    ("lemma-normal-abelian", l_normal_abelian),
    ("lemma3.4-family", l_lemma34),
    ("prop3.2-not-weakly-closed", l_prop32),
]


# -- the |Omega| = 4 mini-instance -------------------------------------------------


class MiniContext(SmallContext):
    def __init__(self, cfg: Config):
        super().__init__(cfg)
        self.om = omega_of_size(4)
        self.table = tk.Class2Table(self.om)
        self.V = BlockModule(SemidirectGroup(self.om), cycle_bound=cfg.cycle_bound)
        a, b, c, d = self.om.labels
        self.E0 = [h_gen(self.om, a)] + [h_comm_gen(self.om, a, x) for x in (b, c, d)]

    def cfg_count(self) -> int:
        return 48


def m_engine_agreement(ctx: MiniContext, rng, cfg):
    images = [ctx.V.local_matrices(h_gen(ctx.om, x)) for x in ctx.om.labels]
    res = tk.engine_agreement(ctx.table, images, rng, 10 ** 4)
    # the table arithmetic against the element-level collection
    sym_bad = 0
    for _ in range(500):
        i, j = (int(x) for x in rng.integers(ctx.table.order, size=2))
        sym_bad += ctx.table.index_of(h_mul(ctx.table.element(i), ctx.table.element(j))) != ctx.table.mul(i, j)
    res["table_vs_collection_mismatches"] = sym_bad
    n = res["samples"]
    ok = res["products"] == res["commutators"] == res["conjugations"] == n and sym_bad == 0
    return ok, res, res.pop("first_mismatch")


def m_E0_quadratic(ctx: MiniContext, rng, cfg):
    quad = is_quadratic_subgroup(ctx.E0, ctx.V)
    fixed = ctx.V.fixed_space_dim(ctx.E0)
    return quad and ctx.V.dim == 216, {"dim": ctx.V.dim, "quadratic": quad, "dim_C_V(E0)": fixed,
                                       "jlog": jlog(ctx.E0, 4, ctx.V).log3}, None


def m_E0_weakly_closed(ctx: MiniContext, rng, cfg):
    T = ctx.table
    S = T.subgroup([T.index_of(e) for e in ctx.E0])
    closed, g = tk.weak_closure_bruteforce(T, S)
    return closed and S.order == 81, {"order_E0": S.order, "conjugations": T.order}, \
        None if g is None else T.describe(g)


def m_fixed_dims(ctx: MiniContext, rng, cfg):
    """Blockwise fixed-space dimensions against a dense kernel of the 216 x 216 matrices."""
    bad = []
    n = 12
    for _ in range(n):
        gens = [ctx.table.element(int(i)) for i in rng.integers(ctx.table.order, size=int(rng.integers(1, 4)))]
        blockwise = ctx.V.fixed_space_dim(gens)
        dense = np.hstack([gfp.mat_sub(ctx.V.dense_matrix(g), gfp.identity(ctx.V.dim)) for g in gens])
        if gfp.kernel_basis(dense).shape[0] != blockwise:
            bad.append([h_to_text(g) for g in gens])
    return not bad, {"subgroups": n, "mismatches": len(bad)}, bad[:1] or None


def m_ms(ctx: MiniContext, rng, cfg):
    T, V = ctx.table, ctx.V
    out = {"pairs": 0, "equality_cases": 0, "violations": 0}
    witness = None

    def rand_sub():
        return T.subgroup([int(x) for x in rng.integers(T.order, size=int(rng.integers(1, 3)))])

    while out["pairs"] < 500:
        H = rand_sub()
        kind = out["pairs"] % 4
        # a quarter of the pairs share a factor so the equality case is exercised
        K = H if kind == 0 else rand_sub()
        r = tk.ms_check(T, H, K, V)
        out["pairs"] += 1
        out["equality_cases"] += r.equality
        if not r.consistent:
            out["violations"] += 1
            witness = witness or [list(H.gens), list(K.gens)]
    return out["violations"] == 0, out, witness


def m_descent(ctx: MiniContext, rng, cfg):
    T, V = ctx.table, ctx.V
    triv, sq0 = tk.block_flags(V, T.rows)
    pool = np.nonzero(sq0 & ~triv)[0]
    out = {"quadratic_pool": int(pool.size), "eligible": 0, "skipped": 0, "violations": 0}
    witness = None
    tries = 0
    while out["eligible"] < 1000 and tries < 20000:
        tries += 1
        b = int(pool[rng.integers(pool.size)])
        a = int(rng.integers(T.order))
        r = tk.descent_check(T, a, b, V)
        if r == "skipped":
            out["skipped"] += 1
            continue
        out["eligible"] += 1
        if r == "fail":
            out["violations"] += 1
            witness = witness or [T.describe(a), T.describe(b)]
    return out["violations"] == 0 and out["eligible"] >= 1000, out, witness


MINI_CLAIMS = [
    ("mini-engine-agreement", m_engine_agreement),
    ("mini-E0-quadratic", m_E0_quadratic),
    ("mini-E0-weakly-closed", m_E0_weakly_closed),
    ("mini-fixed-dims-bruteforce", m_fixed_dims),
    ("lemma-ms-inequality", m_ms),
    ("lemma-descent", m_descent),
]


def props(cfg: Config) -> VerificationReport:
    if cfg.omega_size == 2:
        return run_claims("props", SMALL_CLAIMS + LEMMA_CLAIMS, SmallContext(cfg), cfg)
    if cfg.omega_size == 4:
        return run_claims("props", MINI_CLAIMS + LEMMA_CLAIMS, MiniContext(cfg), cfg)
    raise ValueError("props runs with omega size 2 or 4")


# -- user-supplied groups ----------------------------------------------------------


def parse_group_file(text: str):
    """Header ``p dim ngens`` then ``ngens`` matrices in the plain text format."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty group file")
    try:
        p, dim, ngens = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise ValueError("header must be 'p dim ngens'") from exc
    if p != 3:
        raise ValueError("only p = 3 is supported")
    if dim < 1 or ngens < 0:
        raise ValueError("bad header values")
    gens, pos = [], 1
    for k in range(ngens):
        m, pos = gfp.parse_matrix_lines(lines, pos)
        if m.shape != (dim, dim):
            raise ValueError(f"generator {k + 1} has shape {m.shape}, expected ({dim}, {dim})")
        if not gfp.is_invertible(m):
            raise ValueError(f"generator {k + 1} is not invertible")
        gens.append(m)
    if pos != len(lines):
        raise ValueError("trailing content after the last generator")
    return dim, gens


def analyze(cfg: Config, dim: int, gens) -> VerificationReport:
    def body(ctx, rng, cfg):
        G = tk.enumerate_group(gens) if gens else tk.trivial_group(dim)
        M = MatrixModule(dim)
        eas = tk.elementary_abelians(G, cfg.max_rank, cfg.max_subgroups)
        offs = tk.offenders(G, M, eas)
        weak = []
        for r in offs:
            closed, _ = tk.weak_closure_bruteforce(G, r.subgroup)
            weak.append(closed)
        timm = [tk.timmesfeld_check(G, r.subgroup, M, eas).passed for r in offs if r.is_best]
        detail = {
            "order": G.order,
            "dim": dim,
            "quadratic_elements": len(tk.quadratic_elements(G, M)),
            "central_quadratics": len(tk.central_quadratics(G, M)),
            "elementary_abelian_subgroups": len(eas.subgroups),
            "enumeration_complete": eas.complete,
            "offenders": [{"generators": [G.describe(i) for i in r.gens], "jlog": r.jvalue.log3,
                           "best": r.is_best, "quadratic": r.is_quadratic, "weakly_closed": w}
                          for r, w in zip(offs, weak)],
            "every_offender_contains_best": tk.every_offender_contains_best(offs),
            "timmesfeld_all_pass": all(timm),
        }
        return detail["every_offender_contains_best"] and all(timm), detail, None

    return run_claims("analyze", [("analyze-offenders", body)], None, cfg)
