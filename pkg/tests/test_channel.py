import math

import numpy as np
import pytest
from scipy import integrate, special

from afc_keyforge.channel import (
    Geometry,
    RicianParams,
    SPEED_OF_LIGHT,
    complex_normal,
    pathloss_amplitude,
    realize,
    rician_envelope_pdf,
    sample_small_scale,
)


def draw(k, n, seed=0):
    rng = np.random.default_rng(seed)
    p = RicianParams(k)
    return np.array([sample_small_scale(p, rng) for _ in range(n)])


def moment_k_estimate(g):
    """K from the second and fourth moments of the envelope."""
    m2 = np.mean(np.abs(g) ** 2)
    m4 = np.mean(np.abs(g) ** 4)
    root = math.sqrt(max(2 * m2**2 - m4, 0.0))
    return root / (m2 - root)


def envelope_cdf(x, nu, sigma):
    """Numerical integral of x/s^2 exp(-(x^2+nu^2)/2s^2) I0(x nu/s^2)."""
    def pdf(t):
        return t / sigma**2 * math.exp(-(t * t + nu * nu) / (2 * sigma**2)) * special.i0(t * nu / sigma**2)
    return integrate.quad(pdf, 0, x, limit=200)[0]


def ks_statistic(samples, cdf):
    xs = np.sort(samples)
    n = len(xs)
    grid = np.quantile(xs, np.linspace(0, 1, 801))
    f = np.array([cdf(x) for x in grid])
    emp_hi = np.searchsorted(xs, grid, side="right") / n
    emp_lo = np.searchsorted(xs, grid, side="left") / n
    return max(np.max(np.abs(emp_hi - f)), np.max(np.abs(emp_lo - f)))


def test_params_invariants():
    for k in (0.0, 0.5, 3.0, 20.0, 1e6):
        p = RicianParams(k)
        assert p.los_amplitude**2 + 2 * p.sigma**2 == pytest.approx(1.0)
        assert p.implied_k() == pytest.approx(k, rel=1e-12, abs=1e-12)
    inf = RicianParams(math.inf)
    assert inf.los_amplitude == 1.0 and inf.sigma == 0.0
    with pytest.raises(ValueError):
        RicianParams(-1.0)


def test_k_zero_is_rayleigh():
    p = RicianParams(0.0)
    assert p.los_amplitude == 0.0
    g = draw(0.0, 20000, seed=3)
    # Rayleigh envelope with unit power: E|g| = sqrt(pi)/2
    assert np.mean(np.abs(g)) == pytest.approx(math.sqrt(math.pi) / 2, rel=0.01)
    assert abs(np.mean(g)) < 0.02


def test_k_infinite_is_unit_gain():
    rng = np.random.default_rng(0)
    assert sample_small_scale(RicianParams(math.inf), rng) == 1 + 0j


def test_k3_unit_power():
    rng = np.random.default_rng(11)
    p = RicianParams(3.0)
    z = rng.standard_normal((10**6, 2))
    # identical construction to sample_small_scale, vectorised for speed
    g = p.los_amplitude + p.sigma * z[:, 0] + 1j * p.sigma * z[:, 1]
    assert abs(np.mean(np.abs(g) ** 2) - 1.0) < 0.01
    # the scalar sampler consumes the stream the same way
    rng2 = np.random.default_rng(11)
    assert sample_small_scale(p, rng2) == g[0]


@pytest.mark.parametrize("k", [0.0, 3.0, 20.0])
def test_rician_statistics(k):
    g = draw(k, 100_000, seed=int(k) + 1)
    assert abs(np.mean(np.abs(g) ** 2) - 1.0) < 0.01
    if k > 0:
        assert moment_k_estimate(g) == pytest.approx(k, rel=0.05)
    p = RicianParams(k)
    d = ks_statistic(np.abs(g), lambda x: envelope_cdf(x, p.los_amplitude, p.sigma))
    assert d < 1.628 / math.sqrt(len(g))


def test_envelope_pdf_matches_formula():
    p = RicianParams(3.0)
    x = np.linspace(0.01, 2.5, 50)
    nu, s = p.los_amplitude, p.sigma
    direct = x / s**2 * np.exp(-(x**2 + nu**2) / (2 * s**2)) * special.i0(x * nu / s**2)
    np.testing.assert_allclose(rician_envelope_pdf(x, p), direct, rtol=1e-10)
    assert integrate.quad(lambda t: float(rician_envelope_pdf(t, p)), 0, 10)[0] == pytest.approx(1.0, abs=1e-8)


def test_pathloss_physical():
    geom = Geometry(((0.0, 0.0), (15.0, 0.0)), wavelength=0.125)
    a = pathloss_amplitude(15.0, geom, "physical")
    assert a == pytest.approx(6.631e-4, rel=1e-3)
    assert a**2 == pytest.approx(4.397e-7, rel=1e-3)
    exact = Geometry.equidistant(2, 15.0, 2.4e9)
    assert exact.wavelength == pytest.approx(SPEED_OF_LIGHT / 2.4e9)
    assert pathloss_amplitude(15.0, exact, "physical") == pytest.approx(6.631e-4, rel=1e-3)


def test_pathloss_gains_and_normalized():
    geom = Geometry(((0.0, 0.0), (1.0, 0.0)), wavelength=0.125, tx_gain=4.0, rx_gain=9.0)
    assert pathloss_amplitude(2.0, geom, "physical") == pytest.approx(6 * 0.125 / (8 * math.pi))
    assert pathloss_amplitude(1.0, geom, "normalized") == 1.0
    assert pathloss_amplitude(150.0, geom, "normalized") == pytest.approx(6.667e-3, rel=1e-3)
    for bad in (0.0, -3.0):
        with pytest.raises(ValueError):
            pathloss_amplitude(bad, geom)
    with pytest.raises(ValueError):
        pathloss_amplitude(1.0, geom, "bogus")


def test_geometry():
    for n in (2, 3):
        g = Geometry.equidistant(n, 25.0)
        for i in range(n):
            for j in range(i + 1, n):
                assert g.distance(i, j) == pytest.approx(25.0)
    with pytest.raises(ValueError):
        Geometry(((1.0, 1.0), (1.0, 1.0)), 0.1)


def test_realize_structure_and_reciprocity():
    rng = np.random.default_rng(5)
    for n, pairs in ((2, 1), (3, 3), (5, 10)):
        geom = Geometry.equidistant(n, 15.0)
        r = realize(geom, RicianParams(3.0), 0.05, rng)
        assert len(r.links) == pairs
        for i in range(n):
            for j in range(n):
                if i != j:
                    assert r.link(i, j) is r.link(j, i)
                    assert r.link(i, j).pathloss_amplitude == pytest.approx(1 / geom.distance(i, j))


def test_realize_zero_error():
    rng = np.random.default_rng(1)
    r = realize(Geometry.equidistant(3, 15.0), RicianParams(0.0), 0.0, rng)
    for link in r.links.values():
        assert link.estimated_gain == link.true_gain
        assert link.estimation_ratio == 1


def test_estimation_error_variance():
    rng = np.random.default_rng(2)
    geom = Geometry.equidistant(2, 15.0)
    errs = np.array([
        (lambda l: l.estimated_gain - l.true_gain)(realize(geom, RicianParams(3.0), 0.05, rng).link(0, 1))
        for _ in range(100_000)
    ])
    assert np.mean(np.abs(errs) ** 2) == pytest.approx(2.5e-3, rel=0.05)
    # circular symmetry: equal power in both components
    assert np.var(errs.real) == pytest.approx(np.var(errs.imag), rel=0.05)


def test_complex_normal_shapes():
    rng = np.random.default_rng(0)
    assert isinstance(complex_normal(rng, 1.0), complex)
    z = complex_normal(rng, 4.0, size=200_000)
    assert z.shape == (200_000,)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(4.0, rel=0.02)
