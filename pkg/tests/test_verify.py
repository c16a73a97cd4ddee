import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_pkm_case
from trunclap.closed_forms import pkm_decreasing_radius
from trunclap.eigen import closed_form_eigen_gamma2, pkm_supersolution, solve_eigen_fem
from trunclap.mesh import RadialProfile, build_mesh, log_grid
from trunclap.operator import ProblemParams
from trunclap.superlinear import (
    compute_exponents,
    data_recipe,
    integrate_pkp_superlinear,
    pkm_closed_form,
    pkp_scaling_solution,
    sample_closed_form,
    stable_manifold_slope,
)
from trunclap.verify import (
    NEIGHBORHOOD_NOTE,
    CheckReport,
    check_comparison,
    check_convexity_structure,
    check_profile_consistency,
    check_sign_lemma,
    run_suite,
)


def _power_profile(r, a, beta):
    """a - r^beta with exact derivatives."""
    return RadialProfile(r, a - r**beta, -beta * r ** (beta - 1), -beta * (beta - 1) * r ** (beta - 2))


R = log_grid(1e-6, 1.0, 50)


# -- sign lemma ----------------------------------------------------------------


def test_sign_lemma_supersolution_example():
    rep = check_sign_lemma(_power_profile(R, 1.0, 0.5), ProblemParams(k=2, gamma=1.0), "plus",
                           "supersolution")
    assert rep.applicable and rep.passed
    assert rep.worst_violation <= 0


def test_sign_lemma_constant():
    z = np.zeros_like(R)
    prof = RadialProfile(R, np.full_like(R, 2.0), z, z)
    for sign in ("plus", "minus"):
        for context in ("supersolution", "subsolution"):
            rep = check_sign_lemma(prof, ProblemParams(k=2), sign, context)
            assert rep.applicable and rep.passed


def test_sign_lemma_corrupted_node_is_located():
    # u = r^2 is a strict P_k^+ subsolution; one node gets u' < 0 with u''
    # raised so that the differential inequality still holds there
    prof = RadialProfile(R, R**2, 2 * R, 2 * np.ones_like(R))
    du, d2u = prof.du.copy(), prof.d2u.copy()
    du[120], d2u[120] = -R[120], 10.0
    bad = RadialProfile(R, prof.u, du, d2u)
    rep = check_sign_lemma(bad, ProblemParams(k=2), "plus", "subsolution")
    assert rep.applicable and not rep.passed
    assert rep.location_r == R[120]


def test_sign_lemma_wrong_slope_breaks_supersolution_hypothesis():
    # pointwise, u' > 0 already forces P_k^+ > 0, so the gate reports it
    prof = _power_profile(R, 1.0, 0.5)
    du = prof.du.copy()
    du[120] = 0.1
    bad = RadialProfile(prof.r, prof.u, du, prof.d2u)
    rep = check_sign_lemma(bad, ProblemParams(k=2, gamma=1.0), "plus", "supersolution")
    assert not rep.applicable and "r=0.000251189" in rep.note


def test_sign_lemma_neighborhood_case_is_flagged():
    # P_k^+ subsolution: only a neighbourhood of the origin is asserted
    prof = RadialProfile(R, R**2, 2 * R, 2 * np.ones_like(R))
    rep = check_sign_lemma(prof, ProblemParams(k=2), "plus", "subsolution")
    assert rep.passed
    assert "strict" in rep.note or rep.note == NEIGHBORHOOD_NOTE


def test_sign_lemma_inapplicable_when_inequality_fails():
    prof = RadialProfile(R, R**2, 2 * R, 2 * np.ones_like(R))
    rep = check_sign_lemma(prof, ProblemParams(k=2), "plus", "supersolution")
    assert not rep.applicable


def test_sign_lemma_needs_derivatives():
    with pytest.raises(ValueError):
        check_sign_lemma(RadialProfile(R, np.ones_like(R)), ProblemParams(k=2), "plus",
                         "supersolution")
    with pytest.raises(ValueError):
        check_sign_lemma(_power_profile(R, 1, 0.5), ProblemParams(k=2), "plus", "neither")


# -- convexity -----------------------------------------------------------------


def test_convexity_gamma2_eigenfunction():
    rep = check_convexity_structure(closed_form_eigen_gamma2(4).eigenfunction)
    assert rep.passed


def test_convexity_case1_up_to_turning_radius():
    sol = pkm_closed_form(ProblemParams(k=2, mu=1.0, p=2.0), 1.0)
    turn = pkm_decreasing_radius(sol)
    prof = sample_closed_form(sol, 1e-6, turn)
    assert check_convexity_structure(prof).passed
    # u increases again after (beta/2)^(1/(2-beta)) * 3^(2/3) ~ 0.825
    assert turn == pytest.approx((0.25 * 3) ** (1 / 1.5), rel=1e-14)
    beyond = sample_closed_form(sol, 1e-6, 1.0)
    rep = check_convexity_structure(beyond)
    assert not rep.passed and rep.location_r > turn


def test_convexity_log_fails():
    prof = RadialProfile(R, np.log(R), 1 / R, -1 / R**2)
    rep = check_convexity_structure(prof)
    assert not rep.passed


def test_fem_eigenfunction_structure():
    prof = solve_eigen_fem(ProblemParams(k=3, gamma=0.5), build_mesh(1e-8, 1000, 0.8)).eigenfunction
    assert check_convexity_structure(prof).passed


# -- comparison ----------------------------------------------------------------


def test_comparison_case3_ordered_family():
    params = ProblemParams(k=2, mu=8.0, p=3.0)
    r = log_grid(1e-6, 0.3, 50)
    v = sample_closed_form(pkm_closed_form(params, 0.0), 1e-6, 0.3)
    u = sample_closed_form(pkm_closed_form(params, 1.0), 1e-6, 0.3)
    assert np.array_equal(u.r, r)
    C = math.sqrt(6.0)
    rep = check_comparison(u, v, params, 0.3, C * (1 - 1e-12), C, sign="minus")
    assert rep.applicable and rep.passed


def test_comparison_identical_profiles():
    params = ProblemParams(k=2, mu=8.0, p=3.0)
    v = sample_closed_form(pkm_closed_form(params, 0.0), 1e-6, 0.3)
    rep = check_comparison(v, v, params, 0.3, 2.0, 3.0, sign="minus")
    assert rep.passed and rep.worst_violation == 0.0


def test_comparison_integrated_pair():
    params = ProblemParams(k=4, mu=0.75, p=6.0)
    K = compute_exponents(params).K
    r0 = 0.5
    v0, dv0 = data_recipe(params, "scaling", r0)
    v = integrate_pkp_superlinear(params, r0, v0, dv0, 1e-4)
    u0 = 0.9 * v0
    u = integrate_pkp_superlinear(params, r0, u0, stable_manifold_slope(params, r0, u0, 1e-4), 1e-4)
    assert v.meta["status"] == u.meta["status"] == "completed"
    rep = check_comparison(u, v, params, r0, K * (1 - 1e-6), K * (1 + 1e-6))
    assert rep.applicable and rep.passed


def test_comparison_unordered_data_is_inapplicable():
    params = ProblemParams(k=2, mu=8.0, p=3.0)
    v = sample_closed_form(pkm_closed_form(params, 0.0), 1e-6, 0.3)
    u = sample_closed_form(pkm_closed_form(params, 1.0), 1e-6, 0.3)
    rep = check_comparison(v, u, params, 0.3, 0.1, 3.0, sign="minus")
    assert not rep.applicable
    rep = check_comparison(u, v, params, 0.3, 10.0, 30.0, sign="minus")
    assert not rep.applicable and "growth" in rep.note


def test_comparison_detects_crossing():
    # a hand-made pair that satisfies every hypothesis except the conclusion
    # cannot exist; feeding a non-solution u shows the hypothesis gate works
    params = ProblemParams(k=2, mu=8.0, p=3.0)
    v = sample_closed_form(pkm_closed_form(params, 0.0), 1e-6, 0.3)
    u = RadialProfile(v.r, 1.2 * v.u, 1.2 * v.du, 1.2 * v.d2u)
    rep = check_comparison(u, v, params, 0.3, 2.0, 3.0, sign="minus")
    assert not rep.applicable


def test_comparison_radii_mismatch():
    params = ProblemParams(k=2, mu=8.0, p=3.0)
    v = sample_closed_form(pkm_closed_form(params, 0.0), 1e-6, 0.3)
    w = sample_closed_form(pkm_closed_form(params, 0.0), 1e-5, 0.3)
    with pytest.raises(ValueError):
        check_comparison(v, w, params, 0.3, 2.0, 3.0)


# -- reports -------------------------------------------------------------------


def test_report_json_and_invariant():
    rep = check_convexity_structure(closed_form_eigen_gamma2(3).eigenfunction)
    data = json.loads(rep.to_json())
    assert set(data) >= {"name", "passed", "worst_violation", "location_r", "tolerance"}
    assert rep.passed == (rep.worst_violation <= rep.tolerance)


@settings(max_examples=50, deadline=None)
@given(worst=st.floats(-1.0, 1.0), tol=st.floats(1e-12, 1e-2))
def test_report_passed_iff_within_tolerance(worst, tol):
    r = np.array([0.5, 1.0])
    prof = RadialProfile(r, np.array([0.0, -worst]), np.array([0.0, worst]), np.zeros(2))
    rep = check_convexity_structure(prof, tol)
    assert rep.passed == (rep.worst_violation <= rep.tolerance)


def test_run_suite_selection():
    prof = sample_closed_form(pkm_closed_form(ProblemParams(k=2, mu=8.0, p=3.0), 0.0), 1e-6)
    names = [rep.name for rep in run_suite(prof)]
    assert names == ["profile_consistency", "convexity_structure"]
    with pytest.raises(ValueError):
        run_suite(prof, checks=["sign"])
    with pytest.raises(ValueError):
        run_suite(prof, checks=["nope"])


# -- self-consistency and mutation ----------------------------------------------


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1),
       family=st.sampled_from(["pkm_case1", "pkm_case2", "pkm_case3"]))
def test_closed_forms_pass_their_checkers(seed, family):
    params, c, sol = random_pkm_case(np.random.default_rng(seed), family)
    prof = sample_closed_form(sol, 1e-6, 0.999 * pkm_decreasing_radius(sol))
    assert check_convexity_structure(prof, 1e-8).passed
    rep = check_sign_lemma(prof, params, "minus", "supersolution", 1e-8)
    assert rep.passed or not rep.applicable


@pytest.mark.parametrize("k", [3, 4, 5, 8])
def test_gamma2_and_scaling_pass_their_checkers(k):
    prof = closed_form_eigen_gamma2(k).eigenfunction
    assert check_convexity_structure(prof, 1e-8).passed
    rep = check_sign_lemma(prof, ProblemParams(k=k, gamma=2.0), "plus", "supersolution", 1e-8)
    assert rep.passed or not rep.applicable


def test_supersolution_and_scaling_pass_their_checkers():
    for params, sol in [
        (ProblemParams(k=2, N=3, gamma=0.0), pkm_supersolution(ProblemParams(k=2, N=3), 4.0)),
        (ProblemParams(k=2, N=3, gamma=2.0), pkm_supersolution(ProblemParams(k=2, N=3, gamma=2.0), 2.0)),
        (ProblemParams(k=4, mu=0.75, p=6.0), pkp_scaling_solution(ProblemParams(k=4, mu=0.75, p=6.0))),
    ]:
        prof = sample_closed_form(sol, 1e-6, 1.0)
        assert check_convexity_structure(prof, 1e-8).passed


def _mutation_targets():
    params = ProblemParams(k=2, mu=8.0, p=3.0)
    yield sample_closed_form(pkm_closed_form(params, 0.0), 1e-6, per_decade=50)
    yield sample_closed_form(pkm_closed_form(ProblemParams(k=2, mu=1.0, p=2.0), 1.0), 1e-6, 0.8)
    yield sample_closed_form(pkp_scaling_solution(ProblemParams(k=4, mu=0.75, p=6.0)), 1e-6, 1.0)
    yield closed_form_eigen_gamma2(4, per_decade=200).eigenfunction


@pytest.mark.parametrize("index", range(4))
def test_single_node_mutation_is_detected(index):
    prof = list(_mutation_targets())[index]
    assert all(rep.passed for rep in run_suite(prof))
    rng = np.random.default_rng(index)
    nodes = np.unique(np.concatenate([[0, len(prof) - 1], rng.integers(0, len(prof), 40)]))
    peak = np.max(np.abs(prof.u))
    for i in nodes:
        for direction in (1.0, -1.0):
            u = prof.u.copy()
            u[i] += direction * 1e-3 * (abs(u[i]) if u[i] != 0 else peak)
            bad = RadialProfile(prof.r, u, prof.du, prof.d2u)
            assert not all(rep.passed for rep in run_suite(bad)), (i, direction)


def test_consistency_without_second_derivative():
    prof = RadialProfile(R, R**2, 2 * R)
    assert check_profile_consistency(prof, 1e-4).passed
    with pytest.raises(ValueError):
        check_profile_consistency(RadialProfile(R, R))
