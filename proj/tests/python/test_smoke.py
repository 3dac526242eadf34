import math
import os

import numpy as np
import pytest
import scipy.linalg

import limgroup

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "..", "fixtures")


def fixture(name):
    return os.path.join(FIXTURES, name)


def test_expm_matches_scipy():
    rng = np.random.default_rng(3)
    a = rng.uniform(-0.3, 0.3, (3, 3))
    np.testing.assert_allclose(limgroup.expm(a), scipy.linalg.expm(a), atol=1e-13)
    np.testing.assert_allclose(limgroup.logm(limgroup.expm(a)), a, atol=1e-12)
    assert not limgroup.in_log_domain(np.diag([-1.0, 1.0]))


def test_constant_control_integrates_to_exp():
    a = np.array([[0.1, -0.4], [0.3, 0.2]])
    end = limgroup.evol_point([a] * 9, steps=200)
    np.testing.assert_allclose(end, scipy.linalg.expm(a), atol=1e-12)


def test_rotation_control_on_so2():
    j = np.array([[0.0, -0.5], [0.5, 0.0]])
    np.testing.assert_allclose(limgroup.evol_point([j] * 5, group="so"), limgroup.rotation(0.5), atol=1e-12)
    with pytest.raises(limgroup.DomainError):
        limgroup.evol_point([np.eye(2)] * 5, group="so")


def test_log_derivative_of_one_parameter_subgroup():
    a = np.array([[0.2, 0.1], [-0.3, 0.0]])
    samples = [scipy.linalg.expm(t * a) for t in np.linspace(0.0, 1.0, 257)]
    for u in limgroup.log_derivative(samples):
        np.testing.assert_allclose(u, a, atol=1e-7)


def test_det_extension_engines():
    ext = limgroup.Extension(fixture("gl_chain_det.fix"))
    assert ext.name == "gl_chain_det"
    x = [1.8, 0, 0, 0, 1, 0, 0, 0, 1]
    assert ext.extend(x)[0, 0] == pytest.approx(1.8, rel=1e-9)
    assert ext.witness(x) == "1"
    assert ext.extend([4, 0, 0, 0, 1, 0, 0, 0, 1], engine="global")[0, 0] == pytest.approx(4.0, rel=1e-9)
    with pytest.raises(limgroup.DomainError):
        ext.extend([4, 0, 0, 0, 1, 0, 0, 0, 1])


def test_angle_extension_is_the_weighted_sum():
    ext = limgroup.Extension(fixture("weak_so2_angle.fix"))
    angles = [0.1, 0.0, -0.2, 0.0, 0.3]
    assert ext.extend(angles)[0, 0] == pytest.approx(0.1 - 3 * 0.2 + 5 * 0.3, abs=1e-10)
    assert ext.witness(angles) == "{1,3,5}"


def test_corrupted_family_is_rejected():
    with pytest.raises(limgroup.CompatibilityError):
        limgroup.Extension(fixture("gl_chain_det_corrupt_psi.fix"))


def test_diffeomorphism_group():
    a = limgroup.diff_chart(limgroup.bump_field(0.0, 1.5, 0.3))
    b = limgroup.diff_chart(limgroup.bump_field(1.0, 1.0, -0.2))
    ab = a @ b
    assert ab(0.5) == pytest.approx(a(b(0.5)), abs=1e-9)
    assert limgroup.diff_distance(a @ a.inverse(), limgroup.Diffeo.identity()) <= 1e-8
    assert limgroup.support_witness(limgroup.bump_field(-0.5, 1.0, 0.1)) == 2
    with pytest.raises(limgroup.DomainError):
        limgroup.diff_chart(limgroup.bump_field(0.0, 0.5, 0.6))


def test_mapping_group_round_trip():
    assert limgroup.diff_round_trip(5, intervals=1024, steps=250) <= 1e-4


def test_verify_report():
    report = limgroup.verify(suites=["lie_core"], trials=5)
    assert report["version"] == 1 and report["seed"] == 0
    (suite,) = report["suites"]
    assert suite["name"] == "lie_core"
    assert suite["failures"] == 0 and suite["failures_detail"] == []
    assert limgroup.verify(suites=[])["suites"] == []
    with pytest.raises(limgroup.ValidationError):
        limgroup.verify(suites=["bogus"])
    assert "mapping_groups" in limgroup.suite_names()
