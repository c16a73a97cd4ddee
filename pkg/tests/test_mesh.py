import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from trunclap.mesh import (
    GradedMesh,
    RadialProfile,
    build_mesh,
    log_grid,
    power_integral,
    weighted_element_integrals,
)


def test_small_mesh_example():
    mesh = build_mesh(1e-2, 4, 0.5)
    np.testing.assert_allclose(mesh.nodes, [0.01, 0.02, 0.04, 0.08, 1.0], rtol=1e-14)


def test_default_mesh_structure():
    mesh = build_mesh(1e-8, 4000, 0.87)
    ratios = mesh.nodes[:-1] / mesh.nodes[1:]
    geometric = np.isclose(ratios, 0.87, rtol=1e-12)
    m = int(np.argmin(geometric))  # first non-geometric element
    assert 80 <= m <= 95
    widths = mesh.widths[m:]
    np.testing.assert_allclose(widths, widths[0], rtol=1e-9)
    assert widths[0] >= mesh.widths[m - 1]
    assert mesh.n_elems == 4000


@settings(max_examples=60, deadline=None)
@given(
    r_min=st.floats(1e-10, 0.5),
    n=st.integers(2, 500),
    grading=st.floats(0.3, 1.0),
)
def test_mesh_invariants(r_min, n, grading):
    mesh = build_mesh(r_min, n, grading)
    assert mesh.nodes[0] == r_min
    assert mesh.nodes[-1] == 1.0
    assert mesh.n_elems == n
    assert np.all(np.diff(mesh.nodes) > 0)


def test_refine_is_nested():
    mesh = build_mesh(1e-4, 20, 0.7)
    fine = mesh.refine()
    assert fine.n_elems == 40
    assert set(mesh.nodes).issubset(set(fine.nodes))


@pytest.mark.parametrize(
    "args", [(0.0, 4, 0.5), (1.0, 4, 0.5), (1e-3, 1, 0.5), (1e-3, 4, 0.0), (1e-3, 4, 1.5),
             (1e-3, 4.5, 0.5)]
)
def test_mesh_rejects_bad_input(args):
    with pytest.raises(ValueError):
        build_mesh(*args)


def test_mesh_rejects_nonincreasing_nodes():
    with pytest.raises(ValueError):
        GradedMesh(np.array([0.1, 0.1, 1.0]), 1.0, 0.1)
    with pytest.raises(ValueError):
        GradedMesh(np.array([0.0, 0.5, 1.0]), 1.0, 0.0)


def _mp_moments(a, b, s):
    # on x in [0, 1] with a^s factored out, so quad works with O(1) integrands
    mpmath.mp.dps = 40
    a, b, s = mpmath.mpf(a), mpmath.mpf(b), mpmath.mpf(s)
    h = b - a
    ratio = h / a
    pre = h * a**s

    def quad(f):
        return float(pre * mpmath.quad(lambda x: (1 + ratio * x) ** s * f(x), [0, 1]))

    return (
        quad(lambda x: 1),
        quad(lambda x: 1 - x),
        quad(lambda x: x),
        quad(lambda x: (1 - x) ** 2),
        quad(lambda x: x * (1 - x)),
        quad(lambda x: x * x),
    )


@settings(max_examples=60, deadline=None)
@given(
    a=st.floats(1e-9, 0.9),
    rel=st.floats(1e-6, 5.0),
    s=st.floats(-6.0, 6.0),
)
def test_element_moments_against_mpmath(a, rel, s):
    b = a * (1.0 + rel)
    assume(b <= 1.0)
    mom = weighted_element_integrals(np.array([a, b]), s)
    got = [mom.m0[0], mom.m_a[0], mom.m_b[0], mom.m_aa[0], mom.m_ab[0], mom.m_bb[0]]
    want = _mp_moments(a, b, s)
    for g, w in zip(got, want):
        assert abs(g - w) <= 1e-12 * abs(w)


def test_moment_partition_identities():
    nodes = build_mesh(1e-6, 200, 0.8).nodes
    mom = weighted_element_integrals(nodes, 1.25)
    np.testing.assert_allclose(mom.m_a + mom.m_b, mom.m0, rtol=1e-13)
    np.testing.assert_allclose(mom.m_aa + mom.m_ab, mom.m_a, rtol=1e-12)
    np.testing.assert_allclose(mom.m_bb + mom.m_ab, mom.m_b, rtol=1e-12)


def test_power_integral_log_case():
    assert power_integral(1e-3, 1.0, -1.0) == pytest.approx(math.log(1e3), rel=1e-15)
    assert power_integral(0.5, 2.0, 2.0) == pytest.approx((8 - 0.125) / 3, rel=1e-15)


def test_log_grid():
    r = log_grid(1e-4, 1.0, 50)
    assert r[0] == 1e-4 and r[-1] == 1.0
    assert r.size == 201
    ratios = r[1:] / r[:-1]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-10)
    with pytest.raises(ValueError):
        log_grid(0.0, 1.0)


floats_pos = st.floats(1e-300, 1e300, allow_nan=False, allow_infinity=False)
floats_any = st.floats(-1e300, 1e300, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(
    radii=st.lists(floats_pos, min_size=1, max_size=30, unique=True),
    data=st.data(),
)
def test_csv_round_trip_is_lossless(radii, data):
    r = np.sort(np.array(radii))
    n = r.size
    u, du, d2u = (np.array(data.draw(st.lists(floats_any, min_size=n, max_size=n)))
                  for _ in range(3))
    prof = RadialProfile(r, u, du, d2u)
    back = RadialProfile.from_csv(prof.to_csv())
    for name in ("r", "u", "du", "d2u"):
        assert np.array_equal(getattr(back, name), getattr(prof, name))
    back = RadialProfile.from_json(prof.to_json())
    assert np.array_equal(back.u, prof.u)


def test_csv_header_and_file(tmp_path):
    prof = RadialProfile([0.1, 0.2], [1.0, 0.5])
    text = prof.to_csv(tmp_path / "p.csv")
    assert text.splitlines()[0] == "r,u"
    back = RadialProfile.from_csv(tmp_path / "p.csv")
    assert back.du is None and np.array_equal(back.u, prof.u)
    assert json.loads(prof.to_json())["r"] == [0.1, 0.2]


def test_profile_validation_and_restrict():
    with pytest.raises(ValueError):
        RadialProfile([0.2, 0.1], [1.0, 1.0])
    with pytest.raises(ValueError):
        RadialProfile([0.0, 0.1], [1.0, 1.0])
    with pytest.raises(ValueError):
        RadialProfile([0.1, 0.2], [1.0, math.nan])
    with pytest.raises(ValueError):
        RadialProfile([0.1, 0.2], [1.0, 1.0], du=[1.0])
    prof = RadialProfile([0.1, 0.2, 0.3], [3.0, 2.0, 1.0], [0.0] * 3, [0.0] * 3)
    sub = prof.restrict(0.15, 0.3)
    assert list(sub.r) == [0.2, 0.3] and sub.has_derivatives
    assert len(prof.copy()) == 3
