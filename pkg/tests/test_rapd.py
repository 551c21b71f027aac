import itertools

import numpy as np
import pytest

from rasgw.core import DomainError, PointCloud, RngStream, ScaleFamily
from rasgw.rapd import (
    RelationQuartet,
    bisector_pair,
    intra_relational_path,
    mixture_locations,
    normalize_irp,
    normalize_irps,
    rasd_directions,
    sample_rapd,
    sample_rasd,
)
from rasgw import rapd

E1, E2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
SHARP = ScaleFamily("ps", 1e6)


def test_irp():
    np.testing.assert_array_equal(intra_relational_path([1, 0], [0, 1]), [1, -1])
    np.testing.assert_array_equal(intra_relational_path([2, 3], [2, 3]), [0, 0])
    rng = np.random.default_rng(0)
    for _ in range(100):
        x, y = rng.normal(size=4), rng.normal(size=4)
        assert np.array_equal(intra_relational_path(x, y), -intra_relational_path(y, x))
    with pytest.raises(DomainError):
        intra_relational_path([1.0], [1.0, 2.0])


def test_normalize_irp():
    np.testing.assert_allclose(normalize_irp([3.0, 4.0]).coords, [0.6, 0.8], atol=1e-16)
    np.testing.assert_allclose(normalize_irp([0.0, 0.0]).coords, [2**-0.5, 2**-0.5], atol=1e-15)
    rng = np.random.default_rng(1)
    z = rng.normal(size=(1000, 5)) * rng.uniform(1e-9, 1e3, size=(1000, 1))
    assert np.max(np.abs(np.linalg.norm(normalize_irps(z), axis=1) - 1)) <= 1e-12
    with pytest.raises(DomainError):
        normalize_irp([1.0, 0.0], c=0.0)


def test_bisector_cases():
    par = bisector_pair(E1, E1)
    assert par.plus_defined and not par.minus_defined
    np.testing.assert_array_equal(par.z_plus.coords, E1)
    anti = bisector_pair(E1, -E1)
    assert anti.minus_defined and not anti.plus_defined
    np.testing.assert_array_equal(anti.z_minus.coords, E1)
    orth = bisector_pair(E1, E2)
    np.testing.assert_allclose(orth.z_plus.coords, [2**-0.5, 2**-0.5], atol=1e-15)
    np.testing.assert_allclose(orth.z_minus.coords, [2**-0.5, -(2**-0.5)], atol=1e-15)
    assert orth.z_plus.coords @ E1 == pytest.approx(2**-0.5)


def test_bisector_properties_random():
    rng = np.random.default_rng(2)
    for _ in range(500):
        zx, zy = normalize_irps(rng.normal(size=(2, 4)))
        a, b = bisector_pair(zx, zy), bisector_pair(zy, zx)
        assert a.plus_defined or a.minus_defined
        assert abs(a.z_plus.coords @ a.z_minus.coords) <= 1e-10
        assert np.array_equal(a.z_plus.coords, b.z_plus.coords)
        assert np.array_equal(a.z_minus.coords, -b.z_minus.coords)


def test_quartet_validation():
    RelationQuartet([0, 1], [1, 0], [2, 2], [0, 0])
    with pytest.raises(DomainError):
        RelationQuartet([0, 1], [1, 0], [2, 2, 2], [0, 0])
    with pytest.raises(DomainError):
        RelationQuartet([0, np.nan], [1, 0], [2, 2], [0, 0])


def test_sample_rapd_dirac_parallel():
    q = RelationQuartet([2.0, 0.0], [0.0, 0.0], [5.0, 0.0], [1.0, 0.0])
    for s in range(50):
        th = sample_rapd(q, SHARP, RngStream(s)).coords
        # minus bisector is undefined, so every draw sits at z_plus = e1
        assert th @ E1 >= 0.999
        assert abs(np.linalg.norm(th) - 1) <= 1e-12


def test_fair_coin_between_defined_bisectors():
    m = 10_000
    dx, dy = np.tile(E1, (m, 1)), np.tile(E2, (m, 1))
    th = rapd._rapd_from_quartets(dx, dy, SHARP, RngStream(3).generator())
    zp = (E1 + E2) / np.sqrt(2)
    frac = np.mean(th @ zp > 0.999)
    assert abs(frac - 0.5) <= 0.02
    assert np.all((th @ zp > 0.999) | (np.abs(th @ ((E1 - E2) / np.sqrt(2))) > 0.999))


def test_mixture_fallback():
    zx = np.array([E1, E1])
    zy = np.array([E1, -E1])
    loc, plus = mixture_locations(zx, zy, np.array([False, True]))
    np.testing.assert_array_equal(plus, [True, False])
    np.testing.assert_array_equal(loc, [E1, E1])


def test_two_point_cloud_enumeration():
    pts = np.array([[0.0, 0.0], [1.0, 0.0]])
    quartets = list(itertools.product(range(2), repeat=4))
    assert len(quartets) == 16
    dx = np.array([pts[i] - pts[j] for i, j, _, _ in quartets])
    dy = np.array([pts[k] - pts[l] for _, _, k, l in quartets])
    th = rapd._rapd_from_quartets(dx, dy, SHARP, RngStream(4).generator())
    nondeg = np.array([i != j and k != l for i, j, k, l in quartets])
    assert nondeg.sum() == 4
    assert np.all(np.abs(th[nondeg] @ E1) >= 0.999)
    assert np.all(np.isfinite(th))
    # sampled version: at least the non-degenerate share (1/4) lands on +-e1
    cloud = PointCloud(pts)
    dirs = sample_rasd(cloud, cloud, SHARP, 4000, RngStream(5))
    assert np.mean(np.abs(dirs @ E1) >= 0.999) >= 0.25 - 0.03


def test_rasd_errors_and_determinism():
    rng = np.random.default_rng(6)
    mu, nu = PointCloud(rng.normal(size=(10, 3))), PointCloud(rng.normal(size=(12, 3)))
    with pytest.raises(DomainError):
        sample_rasd(mu, nu, SHARP, 0, RngStream(0))
    with pytest.raises(DomainError):
        sample_rasd(mu, PointCloud(rng.normal(size=(12, 2))), SHARP, 5, RngStream(0))
    a = sample_rasd(mu, nu, ScaleFamily("vmf", 10.0), 100, RngStream(7))
    b = sample_rasd(mu, nu, ScaleFamily("vmf", 10.0), 100, RngStream(7))
    assert a.tobytes() == b.tobytes()
    assert np.max(np.abs(np.linalg.norm(a, axis=1) - 1)) <= 1e-12


def test_forced_duplicates_stay_finite():
    rng = np.random.default_rng(8)
    X = np.repeat(rng.normal(size=(3, 4)), 2, axis=0)
    X[:] = X[0]  # every IRP degenerate
    Y = rng.normal(size=(6, 4))
    for fam in ("ps", "vmf"):
        th = rasd_directions(X, Y, ScaleFamily(fam, 50.0), 10_000, rng)
        assert np.all(np.isfinite(th))
        assert np.max(np.abs(np.linalg.norm(th, axis=1) - 1)) <= 1e-12
