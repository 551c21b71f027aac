import numpy as np
import pytest
from scipy import special, stats

from rasgw.core import DomainError, RngStream, ScaleFamily, UnitDirection
from rasgw.sphere import (
    householder_apply,
    householder_to,
    ps_directions,
    sample_power_spherical,
    sample_uniform,
    sample_vmf,
    scale_directions,
    uniform_directions,
    vmf_acceptance_rate,
    vmf_directions,
)


def bessel_ratio(d, kappa):
    """Mean resultant length of vMF on S^{d-1}: I_{d/2}(k) / I_{d/2-1}(k) via scaled Bessel functions."""
    return special.ive(d / 2, kappa) / special.ive(d / 2 - 1, kappa)


def random_unit(rng, d):
    v = rng.normal(size=d)
    return v / np.linalg.norm(v)


def gen(seed=0):
    return RngStream(seed).generator()


def test_bessel_oracle_closed_form():
    # d = 3 has the closed form coth(k) - 1/k
    assert bessel_ratio(3, 5.0) == pytest.approx(1 / np.tanh(5.0) - 0.2, rel=1e-12)


def test_uniform_d1_symmetry():
    x = uniform_directions(1, 10_000, gen(1))
    assert set(np.unique(x)) <= {-1.0, 1.0}
    assert abs(np.mean(x > 0) - 0.5) <= 0.02


def test_uniform_moments():
    x = uniform_directions(5, 100_000, gen(2))
    assert np.linalg.norm(x.mean(axis=0)) <= 0.02
    y = uniform_directions(3, 100_000, gen(3))
    assert np.max(np.abs(y.T @ y / len(y) - np.eye(3) / 3)) <= 0.01
    with pytest.raises(DomainError):
        sample_uniform(0, RngStream(0))
    assert sample_uniform(4, RngStream(0)).d == 4


def test_vmf_dirac_limit():
    loc = random_unit(np.random.default_rng(4), 3)
    th = vmf_directions(np.tile(loc, (1000, 1)), 1e6, gen(4))
    assert np.all(th @ loc >= 0.999)


@pytest.mark.parametrize("d, kappa", [(3, 5.0), (2, 1.0), (10, 20.0)])
def test_vmf_mean_resultant_length(d, kappa):
    loc = random_unit(np.random.default_rng(5), d)
    th = vmf_directions(np.tile(loc, (100_000, 1)), kappa, gen(5))
    assert abs(np.linalg.norm(th.mean(axis=0)) - bessel_ratio(d, kappa)) <= 0.02


def test_vmf_at_e1_and_non_unit_location():
    e1 = np.array([1.0, 0.0, 0.0])
    th = vmf_directions(np.tile(e1, (500, 1)), 3.0, gen(6))
    assert np.max(np.abs(np.linalg.norm(th, axis=1) - 1)) <= 1e-12
    with pytest.raises(DomainError):
        sample_vmf([1.0, 0.1], 1.0, RngStream(0))
    with pytest.raises(DomainError):
        sample_power_spherical([1.0, 0.1], 1.0, RngStream(0))
    with pytest.raises(DomainError):
        sample_vmf([1.0, 0.0], 0.0, RngStream(0))


@pytest.mark.parametrize("d", [2, 3, 16, 64])
@pytest.mark.parametrize("kappa", [1e-3, 1.0, 1e3, 1e6])
def test_vmf_rejection_iterations_bounded(d, kappa):
    rate = vmf_acceptance_rate(d, kappa, 5000, gen(7))
    assert rate > 0
    assert 1 / rate <= 3


def test_ps_mean_inner_product():
    loc = random_unit(np.random.default_rng(8), 3)
    th = ps_directions(np.tile(loc, (100_000, 1)), 2.0, gen(8))
    assert abs(np.mean(th @ loc) - 0.5) <= 0.01


def test_ps_uniform_limit_and_unit_norm():
    loc = random_unit(np.random.default_rng(9), 4)
    th = ps_directions(np.tile(loc, (100_000, 1)), 1e-6, gen(9))
    assert np.linalg.norm(th.mean(axis=0)) <= 0.02
    assert np.max(np.abs(np.linalg.norm(th, axis=1) - 1)) <= 1e-12


@pytest.mark.parametrize("d, kappa", [(2, 3.0), (3, 50.0), (8, 0.5)])
def test_ps_cosine_follows_beta(d, kappa):
    loc = random_unit(np.random.default_rng(10), d)
    th = ps_directions(np.tile(loc, (10_000, 1)), kappa, gen(10))
    z = (1 + th @ loc) / 2
    ks = stats.kstest(z, stats.beta((d - 1) / 2 + kappa, (d - 1) / 2).cdf).statistic
    assert ks <= 0.015


@pytest.mark.parametrize("family", ["vmf", "ps"])
def test_cosine_law_invariant_to_location(family):
    rng = np.random.default_rng(11)
    l1, l2 = random_unit(rng, 5), random_unit(rng, 5)
    sc = ScaleFamily(family, 4.0)
    c1 = scale_directions(np.tile(l1, (10_000, 1)), sc, gen(12)) @ l1
    c2 = scale_directions(np.tile(l2, (10_000, 1)), sc, gen(13)) @ l2
    assert stats.ks_2samp(c1, c2).pvalue > 0.001


def test_householder():
    rng = np.random.default_rng(14)
    e1 = np.eye(4)[0]
    v = random_unit(rng, 4)
    np.testing.assert_array_equal(householder_to(e1, v).coords, v)
    loc = random_unit(rng, 4)
    np.testing.assert_allclose(householder_to(loc, e1).coords, loc, atol=1e-15)
    locs = np.array([random_unit(rng, 6) for _ in range(1000)])
    vs = np.array([random_unit(rng, 6) for _ in range(1000)])
    out = householder_apply(locs, vs)
    assert np.max(np.abs(np.linalg.norm(out, axis=1) - 1)) <= 1e-12
    # orthogonal map: inner products preserved
    w = np.array([random_unit(rng, 6) for _ in range(1000)])
    np.testing.assert_allclose(np.sum(householder_apply(locs, w) * out, axis=1), np.sum(w * vs, axis=1), atol=1e-12)


def test_single_draw_wrappers_are_seeded():
    loc = UnitDirection([0.0, 1.0, 0.0])
    a = sample_power_spherical(loc, 5.0, RngStream(3)).coords
    b = sample_power_spherical(loc, 5.0, RngStream(3)).coords
    assert a.tobytes() == b.tobytes()
    assert sample_vmf(loc, 5.0, RngStream(3)).d == 3
