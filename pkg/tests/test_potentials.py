import itertools

import numpy as np
import pytest

from ugjohnson import johnson, potentials as pot, sos, steppoly, ug_core
from ugjohnson.monomials import EventPoly
from ugjohnson.potentials import (LocalDistributionCollection, ShiftPartitionSpec,
                                  potential_restriction_check, data_processing_check,
                                  default_eps_schedule, dense_subcube_indicators,
                                  edge_cover_decompose, extract_local, g_parts,
                                  mutual_information, pairwise_mi, phi_global_restricted,
                                  phi_integral, phi_potential, pinsker_check,
                                  psi_potential, shift_fn_eval, tv_distance, y_slots)


@pytest.fixture(scope="module")
def setup():
    g = johnson.build(5, 2, 0.5)  # 10 vertices
    inst, A = ug_core.plant(g, 2, ug_core.PlantedSpec(0.0, 3))
    p = steppoly.build(0.3, 0.1)
    return g, inst, A, p


# --------------------------------------------------------------------------
# shift functions and potentials


def test_shift_fn_integral_pair(setup):
    g, inst, A, p = setup
    pe = sos.from_assignment(A, 2)
    prod = sos.ProductPE(pe, pe)
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="steppoly", step=p)
    for u in range(5):
        assert shift_fn_eval(spec, prod, u, 0) >= (1 - 0.1) ** 2
        assert shift_fn_eval(spec, prod, u, 1) == 0.0
    # plain mode: sum over shifts is exactly 1
    spec_g = ShiftPartitionSpec(inst, 0.3, 0.1, mode="plain")
    for u in range(5):
        assert sum(shift_fn_eval(spec_g, prod, u, s) for s in range(2)) == \
            pytest.approx(1.0)


def test_shift_fn_integral_shift_parts(setup):
    g, inst, A, _ = setup
    xp = (A + 1) % 2
    prod = sos.ProductPE(sos.from_assignment(A, 2), sos.from_assignment(xp, 2))
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="plain")
    for u in range(10):
        s = (A[u] - xp[u]) % 2
        assert shift_fn_eval(spec, prod, u, s) == pytest.approx(1.0)
        assert shift_fn_eval(spec, prod, u, (s + 1) % 2) == pytest.approx(0.0)


def test_phi_examples(setup):
    g, inst, A, p = setup
    pe = sos.from_assignment(A, 2)
    prod = sos.ProductPE(pe, pe)
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="steppoly", step=p)
    rep = phi_potential(spec, prod)
    assert rep["phi"] >= (1 - 0.1) ** 4 - 1e-12
    assert rep["phi"] <= 1.0 + 1e-12
    # two unrelated assignments: phi equals the direct formula
    rng = np.random.default_rng(0)
    x, xp = rng.integers(0, 2, 10), rng.integers(0, 2, 10)
    prod2 = sos.ProductPE(sos.from_assignment(x, 2), sos.from_assignment(xp, 2))
    rep2 = phi_potential(spec, prod2)
    assert rep2["phi"] == pytest.approx(phi_integral(inst, x, xp, p))


def test_phi_global_restricted_full_graph_equals_phi(setup):
    g, inst, A, p = setup
    prod = sos.ProductPE(sos.from_assignment(A, 2), sos.from_assignment(A, 2))
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="steppoly", step=p)
    sub = johnson.subcube(g, (0,))
    rep = phi_global_restricted(spec, prod, sub)
    assert rep["phi"] >= (1 - 0.1) ** 4 - 1e-12  # planted pair stays dense
    full_scope = ShiftPartitionSpec(inst, 0.3, 0.1, mode="steppoly", step=p,
                                    scope=tuple(range(10)))
    assert phi_potential(full_scope, prod)["phi"] == pytest.approx(
        phi_potential(spec, prod)["phi"])


def test_phi_moment_path_plain(setup):
    g, inst, A, p = setup
    pe = sos.solve(sos.relax(inst, 4))
    prod = sos.product(pe)
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="plain")
    rep = phi_potential(spec, prod)
    assert rep["representation"] == "moments"
    assert 0.0 - 1e-9 <= rep["phi"] <= 1.0 + 1e-9


def test_potential_restriction_enumerated(setup):
    # enumerate every 1-restriction of J(8,4,2) on several integral pairs
    g = johnson.build(8, 4, 0.5)
    inst, A = ug_core.plant(g, 2, ug_core.PlantedSpec(0.15, 1))
    rng = np.random.default_rng(1)
    base = steppoly.build(0.7, 0.1)
    boundary = 1 - 3 / 6  # per-vertex outgoing fraction of a 1-restriction
    for a in itertools.combinations(range(8), 1):
        sub = johnson.subcube(g, a)
        for xp in (A, (A + 1) % 2, rng.integers(0, 2, g.num_vertices)):
            rep = potential_restriction_check(inst, A, np.asarray(xp), sub, base,
                                         shift=boundary)
            assert rep["ok"], rep


def test_psi_examples(setup):
    g, inst, A, _ = setup
    assert psi_potential(sos.from_assignment(A, 2), inst) == pytest.approx(1.0)
    sym = sos.shift_symmetrize(sos.from_assignment(A, 2))
    assert psi_potential(sym, inst) == pytest.approx(1.0)
    with pytest.raises(sos.DegreeExhausted):
        psi_potential(sos.from_assignment(A, 2, degree=2), inst)


# --------------------------------------------------------------------------
# local distributions


def test_extract_local_integral_point_masses(setup):
    g, inst, A, p = setup
    prod = sos.ProductPE(sos.from_assignment(A, 2), sos.from_assignment(A, 2))
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="steppoly", step=p)
    coll = extract_local(prod, spec, [y_slots(0, 1, False, True)])
    arr = coll.joint(y_slots(0, 1, False, True))
    # X-part is a point mass at the assignment; p-part concentrates near 1
    assert arr[A[0], A[1]].sum() == pytest.approx(1.0)
    assert arr[A[0], A[1], 1, 1] >= (1 - 0.1) ** 2


def test_extract_local_product_factorizes(setup):
    g, inst, A, _ = setup
    rng = np.random.default_rng(2)
    xp = rng.integers(0, 2, 10)
    prod = sos.ProductPE(sos.from_assignment(A, 2), sos.from_assignment(xp, 2))
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="plain")
    slots = (("X", 0), ("Xp", 0))
    arr = LocalDistributionCollection(prod, spec, 4).joint(slots)
    assert arr[A[0], xp[0]] == pytest.approx(1.0)


def test_extract_local_marginal_consistency(setup):
    g, inst, A, p = setup
    pe = sos.solve(sos.relax(inst, 4))
    prod = sos.product(pe)
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="plain")
    coll = LocalDistributionCollection(prod, spec, 6)
    j01 = coll.joint((("X", 0), ("X", 1)))
    j02 = coll.joint((("X", 0), ("X", 2)))
    assert np.abs(j01.sum(axis=1) - j02.sum(axis=1)).max() < 1e-8


def test_extract_local_clamp_policy(setup):
    g, inst, _, _ = setup
    pe = sos.solve(sos.relax(inst, 4))
    prod = sos.product(pe)
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="plain")
    coll = LocalDistributionCollection(prod, spec, 4)
    arr = coll.joint((("X", 3), ("X", 7)))
    assert arr.min() >= 0.0 and arr.sum() == pytest.approx(1.0)


# --------------------------------------------------------------------------
# information utilities


def test_mi_examples():
    independent = np.outer([0.3, 0.7], [0.5, 0.5])
    assert mutual_information(independent, (0,), (1,)) == pytest.approx(0.0, abs=1e-12)
    assert pinsker_check(independent, (0,), (1,))["tv"] == pytest.approx(0.0)
    correlated = np.array([[0.5, 0.0], [0.0, 0.5]])
    assert mutual_information(correlated, (0,), (1,)) == pytest.approx(1.0)


def test_pinsker_random_joints():
    rng = np.random.default_rng(3)
    for _ in range(200):
        j = rng.random((4, 4))
        j /= j.sum()
        rep = pinsker_check(j, (0,), (1,))
        assert rep["residual"] >= -1e-9


def test_data_processing():
    rng = np.random.default_rng(4)
    for _ in range(100):
        j = rng.random((4, 4))
        j /= j.sum()
        gmap = rng.integers(0, 2, 4)
        hmap = rng.integers(0, 3, 4)
        rep = data_processing_check(j, gmap, hmap)
        assert rep["residual"] >= -1e-9


def test_pairwise_mi_independent_is_zero(setup):
    g, inst, A, _ = setup
    # uniform independent labels: a solved uniform table
    rel = sos.relax(inst, 4)
    peU = sos.SolvedPE(10, 2, 4, {m: float(v) for m, v in
                                  zip(rel.classes, rel.problem._uniform_y)})
    prod = sos.ProductPE(peU, peU)
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="plain")
    coll = LocalDistributionCollection(prod, spec, 8)
    stats = pairwise_mi(coll, range(6), max_pairs=10)
    assert stats.average == pytest.approx(0.0, abs=1e-9)
    assert stats.maximum >= stats.average >= 0


# --------------------------------------------------------------------------
# dense subcubes and edge covering


def test_dense_subcube_globally_dense_never_fires(setup):
    g, inst, A, _ = setup
    eps = [0.01, 0.5]
    rep = dense_subcube_indicators(g, inst, A, A, eps)
    assert rep["fired"] == {}  # G_0 is globally eps_0-dense, maximality kills all


def test_dense_subcube_fires_on_planted_structure():
    g = johnson.build(10, 2, 0.5)
    inst, A = ug_core.plant(g, 2, ug_core.PlantedSpec(0.0, 2))
    # x agrees with x' exactly on the subcube J|_{0} (9 of 45 vertices, so the
    # zero-shift part is not globally eps_0-dense but fills J|_{0})
    sub = johnson.subcube(g, (0,))
    ids = sub.vertex_ids()
    xp = (A + 1) % 2
    xp[ids] = A[ids]
    eps = [0.22, 0.9]
    rep = dense_subcube_indicators(g, inst, A, xp, eps)
    fired = rep["fired"].get((0, 1), [])
    assert fired == [(0,)]
    for row in rep["rows"]:
        assert row["count_mean"] <= row["bound"] + row["bridge_excess"] + 1e-12


def test_dense_subcube_schedule_precondition(setup):
    g, inst, A, _ = setup
    with pytest.raises(ValueError):
        dense_subcube_indicators(g, inst, A, A, [0.5, 0.5])


def test_edge_cover_planted_t0(setup):
    g, inst, A, _ = setup
    rep = edge_cover_decompose(g, inst, A, A, 1)
    assert rep["lhs"] == pytest.approx(1.0)
    assert rep["terms"][0] == pytest.approx(1.0)
    assert rep["slack"] >= -1e-9


def test_edge_cover_random_pairs(setup):
    g, inst, A, _ = setup
    rng = np.random.default_rng(5)
    for _ in range(10):
        x, xp = rng.integers(0, 2, 10), rng.integers(0, 2, 10)
        rep = edge_cover_decompose(g, inst, x, xp, 1)
        assert rep["slack"] >= -1e-9
        assert rep["bridge_excess"] == 0.0


def test_edge_cover_schedule_validation(setup):
    g, inst, A, _ = setup
    with pytest.raises(ValueError):
        edge_cover_decompose(g, inst, A, A, 1, eps=[0.3, 0.3])


def test_crossing_edges_stay_in_parts(setup):
    # every edge satisfied by both assignments has endpoints in one G_s part
    g, inst, A, _ = setup
    rng = np.random.default_rng(6)
    from ugjohnson.ug_core import satisfied_mask
    for _ in range(20):
        x, xp = rng.integers(0, 2, 10), rng.integers(0, 2, 10)
        both = satisfied_mask(inst, x) & satisfied_mask(inst, xp)
        d = (x - xp) % 2
        for k, (u, v, _) in enumerate(inst.edges):
            if both[k]:
                assert d[u] == d[v]


def test_sum_of_part_densities_is_one(setup):
    g, inst, A, _ = setup
    rng = np.random.default_rng(7)
    x, xp = rng.integers(0, 2, 10), rng.integers(0, 2, 10)
    G = g_parts(inst, x, xp)
    assert G.sum(axis=0).max() == 1.0 and G.sum(axis=0).min() == 1.0
    pe = sos.solve(sos.relax(inst, 4))
    prod = sos.product(pe)
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="plain")
    tot = sum(shift_fn_eval(spec, prod, 0, s) for s in range(2))
    assert tot == pytest.approx(1.0, abs=1e-8)


def test_default_eps_schedule_preconditions():
    for r in (1, 2, 3):
        eps = default_eps_schedule(r)
        assert eps[r] <= np.exp(-r) + 1e-15
        for i in range(1, r + 1):
            assert eps[i - 1] <= eps[i] ** 5 / 2 ** (6 * r) + 1e-18
            assert eps[i - 1] <= eps[i] / (2 ** (i + 1) * i) + 1e-15


# --------------------------------------------------------------------------
# composed step events, report schemas, interface dumps


def test_compose_val_exact_eval(setup):
    g, inst, A, p = setup
    from ugjohnson.steppoly import compose_val, linear_surrogate
    ev = compose_val(p, inst, 0)
    assert ev.exact_eval(A) >= 1 - p.nu          # vertex value 1 on satisfied
    bad = (A + np.arange(10) % 2) % 2            # break many constraints at 0
    v0 = pot.vertex_values(inst, bad)[0]
    assert ev.exact_eval(bad) == pytest.approx(float(p(v0)))
    if v0 <= p.beta:
        assert ev.exact_eval(bad) <= p.nu + 1e-9
    # truncation-mode polynomial equals the linear surrogate exactly
    f = linear_surrogate(p.beta, p.nu)
    from ugjohnson.monomials import evaluate
    assert evaluate(ev.poly, A) == pytest.approx(float(f(1.0)))
    assert ev.provenance == "surrogate"


def test_compose_val_both_mode(setup):
    g, inst, A, p = setup
    from ugjohnson.steppoly import compose_val
    ev = compose_val(p, inst, 0, mode="both")
    assert ev.exact_eval(A, A) >= 1 - p.nu
    xp = (A + 1) % 2
    assert ev.exact_eval(A, xp) >= 1 - p.nu      # global shift keeps both-sat


def test_level_report_schema(setup):
    from ugjohnson.cayley import CayleyDomain, level_report, symmetrize_perm
    dom = CayleyDomain(3, 2, 1)
    rng = np.random.default_rng(1)
    rep = level_report(dom, symmetrize_perm(dom, rng.random(dom.shape)))
    assert set(rep) == {"levels", "parseval_residual"}
    assert all(set(row) == {"i", "eta", "lambda"} for row in rep["levels"])
    assert rep["parseval_residual"] < 1e-9


def test_summary_report_schema(setup):
    g, inst, A, p = setup
    pe = sos.shift_symmetrize(sos.from_assignment(A, 2))
    prod = sos.ProductPE(pe, pe)
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="steppoly", step=p)
    coll = LocalDistributionCollection(prod, spec, 8)
    stats = pairwise_mi(coll, range(6), max_pairs=6)
    dec = edge_cover_decompose(g, inst, A, A, 1)
    rep = pot.summary_report(spec, prod, johnson.subcube(g, (0,)), stats, dec)
    assert set(rep) == {"phi", "phi_restricted", "psi", "mi", "edge_cover"}
    assert rep["phi_restricted"]["a"] == [0]
    assert rep["psi"] == pytest.approx(1.0)


def test_data_processing_on_extracted_locals(setup):
    g, inst, A, _ = setup
    pe = sos.solve(sos.relax(inst, 4))
    prod = sos.product(pe)
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="plain")
    coll = LocalDistributionCollection(prod, spec, 8)
    joint = coll.joint((("X", 0), ("Xp", 1))).reshape(2, 2)
    rng = np.random.default_rng(2)
    for _ in range(10):
        gmap, hmap = rng.integers(0, 2, 2), rng.integers(0, 2, 2)
        assert data_processing_check(joint, gmap, hmap)["residual"] >= -1e-9


def test_psi_skips_never_occurring_shifts(setup):
    g, inst, A, _ = setup
    # a point-mass pe: for u != v only one shift has positive probability;
    # the floor policy must silently skip the zero-probability ones
    pe = sos.from_assignment(A, 2)
    val = psi_potential(pe, inst)
    assert val == pytest.approx(1.0)


def test_edges_csv_dump(tmp_path, setup):
    g, _, _, _ = setup
    path = tmp_path / "edges.csv"
    johnson.dump_edges_csv(g, str(path))
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 1 + g.num_edges


def test_p_slot_joint_moment_path(setup):
    # solver-backed product: (X_u, p_u) joints fit the budget exactly and use
    # the flagged surrogate; full Y-with-p joints fall back to factorization
    g, inst, A, _ = setup
    pe = sos.solve(sos.relax(inst, 4))
    prod = sos.product(pe)
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="surrogate")
    coll = LocalDistributionCollection(prod, spec, 8)
    j = coll.joint((("X", 0), ("p", 0)))
    assert coll.flags[(("X", 0), ("p", 0))] == "moments_surrogate"
    assert j.min() >= 0.0 and j.sum() == pytest.approx(1.0)
    # full Y joints with p-coordinates fit at D=4 through the per-factor
    # conditional treatment, still flagged as a surrogate truncation
    big = y_slots(0, 1, False, True)
    arr = coll.joint(big)
    assert coll.flags[big] == "moments_surrogate"
    assert arr.min() >= 0.0 and arr.sum() == pytest.approx(1.0)
    # X-only joints that exceed the side budget fall back to factorization
    wide = (("X", 0), ("X", 1), ("X", 2), ("X", 3), ("X", 4), ("X", 5))
    coll.joint(wide)
    assert coll.flags[wide] == "factorized"


def test_p_slot_support_path_uses_real_steppoly(setup):
    g, inst, A, p = setup
    pe = sos.from_assignment(A, 2)
    prod = sos.ProductPE(pe, pe)
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="steppoly", step=p)
    coll = LocalDistributionCollection(prod, spec, 8)
    j = coll.joint((("p", 0), ("pp", 0)))
    # every vertex value is 1 on the satisfied pair, so p_u = 1 w.p. p(1)
    pv = float(p(1.0))
    assert j[1, 1] == pytest.approx(pv * pv)
    assert j.sum() == pytest.approx(1.0)


def test_support_and_moment_paths_agree(setup):
    # the same pseudoexpectation represented two ways (explicit support vs a
    # solver-style reduced table) must give identical potentials and joints
    g, inst, A, p = setup
    q = 2
    rng = np.random.default_rng(11)
    B = rng.integers(0, 2, 10)
    mix = sos.mixture([(sos.from_assignment(A, q), 0.6),
                       (sos.from_assignment(B, q), 0.4)])
    rel = sos.relax(inst, 4)
    table = {}
    for m in rel.classes:
        table[m] = mix.moment(m)
    solved_like = sos.SolvedPE(10, q, 4, table)
    prod_support = sos.ProductPE(mix, mix)
    prod_table = sos.ProductPE(solved_like, solved_like)
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="plain")
    # phi: exact support route vs Z-moment route
    a = phi_potential(spec, prod_support)
    b = phi_potential(spec, prod_table)
    assert a["representation"] == "support" and b["representation"] == "moments"
    assert a["phi"] == pytest.approx(b["phi"], abs=1e-10)
    # psi on the single copies
    assert psi_potential(mix, inst) == pytest.approx(
        psi_potential(solved_like, inst), abs=1e-10)
    # local joints
    ca = LocalDistributionCollection(prod_support, spec, 8)
    cb = LocalDistributionCollection(prod_table, spec, 8)
    slots = (("X", 0), ("X", 3), ("Xp", 0), ("Xp", 3))
    assert np.abs(ca.joint(slots) - cb.joint(slots)).max() < 1e-10
    # pairwise MI through both routes
    sa = pairwise_mi(ca, range(6), max_pairs=10)
    sb = pairwise_mi(cb, range(6), max_pairs=10)
    assert sa.average == pytest.approx(sb.average, abs=1e-9)


def test_conditioned_support_and_moment_paths_agree(setup):
    g, inst, A, _ = setup
    rng = np.random.default_rng(12)
    B = rng.integers(0, 2, 10)
    mix = sos.mixture([(sos.from_assignment(A, 2), 0.6),
                       (sos.from_assignment(B, 2), 0.4)])
    rel = sos.relax(inst, 4)
    solved_like = sos.SolvedPE(10, 2, 4, {m: mix.moment(m) for m in rel.classes})
    from ugjohnson.rounding import density_poly
    from ugjohnson.monomials import EventPoly
    E = EventPoly(density_poly(inst, list(range(10)), 0), description="delta(G_0)")
    ca = sos.ProductPE(mix, mix).condition(E)
    cb = sos.ProductPE(solved_like, solved_like).condition(E)
    spec = ShiftPartitionSpec(inst, 0.3, 0.1, mode="plain")
    ja = LocalDistributionCollection(ca, spec, 8).joint((("X", 1), ("Xp", 1)))
    jb = LocalDistributionCollection(cb, spec, 8).joint((("X", 1), ("Xp", 1)))
    assert np.abs(ja - jb).max() < 1e-10
    assert phi_potential(spec, ca)["phi"] == pytest.approx(
        phi_potential(spec, cb)["phi"], abs=1e-10)
