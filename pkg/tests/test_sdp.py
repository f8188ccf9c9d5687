from fractions import Fraction

import numpy as np
import pytest

from ugjohnson import johnson, sos, ug_core
from ugjohnson.sdp import repair_psd, solve_admm, solve_ipm


@pytest.fixture(scope="module")
def medium_relaxation():
    g = johnson.build(5, 2, 0.5)
    inst, _ = ug_core.plant(g, 2, ug_core.PlantedSpec(0.35, 7))
    return inst, sos.relax(inst, 4)


def test_ipm_certifies_small_gap(medium_relaxation):
    _, rel = medium_relaxation
    res = solve_ipm(rel.problem)
    assert res.status == "optimal"
    assert res.gap <= 1e-7 * (1 + abs(res.objective))
    assert res.min_eig >= -1e-9  # dual slack is PSD by construction


def test_admm_matches_ipm(medium_relaxation):
    _, rel = medium_relaxation
    res_i = solve_ipm(rel.problem)
    res_a = solve_admm(rel.problem, max_iter=800)
    assert res_a.objective == pytest.approx(res_i.objective, abs=2e-4)
    assert res_a.min_eig >= -1e-9


def test_admm_deterministic(medium_relaxation):
    _, rel = medium_relaxation
    r1 = solve_admm(rel.problem, max_iter=60)
    r2 = solve_admm(rel.problem, max_iter=60)
    assert np.array_equal(r1.y, r2.y)


def test_repair_psd_restores_feasibility(medium_relaxation):
    _, rel = medium_relaxation
    y = rel.problem._uniform_y.copy()
    k = len(y) // 3
    y[k] += 0.8  # break PSD-ness
    M = rel.problem.assemble(y)
    assert np.linalg.eigvalsh(M).min() < 0
    fixed = repair_psd(rel.problem, y)
    assert np.linalg.eigvalsh(rel.problem.assemble(fixed)).min() >= -1e-12
    assert fixed[0] == 1.0


def test_uniform_moments_are_interior(medium_relaxation):
    _, rel = medium_relaxation
    M = rel.problem.assemble(rel.problem._uniform_y)
    assert np.linalg.eigvalsh(M).min() > 0


def test_class_average_is_projection(medium_relaxation):
    _, rel = medium_relaxation
    rng = np.random.default_rng(0)
    W = rng.standard_normal((rel.problem.side, rel.problem.side))
    y = rel.problem.class_average(W)
    # averaging the assembled matrix is idempotent
    y2 = rel.problem.class_average(rel.problem.assemble(y))
    assert np.abs(y - y2).max() < 1e-12


def test_warm_certificate_path():
    g = johnson.build(6, 2, 0.5)
    inst, _ = ug_core.plant(g, 3, ug_core.PlantedSpec(0.0, 1))
    pe = sos.solve(sos.relax(inst, 4))
    assert pe.solve_info["method"] == "warm_certificate"
    assert pe.solve_info["objective"] == pytest.approx(1.0, abs=1e-9)
    assert pe.solve_info["certified"]


def test_ipm_with_orthant_block():
    # degree-2 relaxations carry the pair-nonnegativity inequalities
    tri = ug_core.UGInstance(3, 3, ((0, 1, 1), (1, 2, 1), (0, 2, 2)),
                             tuple([Fraction(1, 3)] * 3))
    rel = sos.relax(tri, 2)
    assert rel.problem.G is not None and rel.problem.G.shape[0] > 0
    res = solve_ipm(rel.problem)
    assert res.status == "optimal"
    pe = sos.solve(rel)
    _, opt = ug_core.brute_force_opt(tri)
    assert pe.solve_info["objective"] >= opt - 1e-6
