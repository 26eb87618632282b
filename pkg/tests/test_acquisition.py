import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from rmbo import acquisition as acq
from rmbo import asf_distribution as ad
from rmbo.errors import InvalidArgument


def _gumbel_ei_quad(q, best):
    val, _ = integrate.quad(lambda g: (best - g) * ad.gumbel_pdf(g, q), -np.inf, best, epsabs=1e-13)
    return val


def test_closed_form_at_mean():
    assert acq.ei_closed_form(0.0, 1.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)


def test_closed_form_zero_sigma():
    assert acq.ei_closed_form(-1.0, 0.0, 0.0) == 1.0
    assert acq.ei_closed_form(1.0, 0.0, 0.0) == 0.0


def test_closed_form_matches_quadrature():
    mu, sigma, best = 0.3, 0.7, 0.5
    val, _ = integrate.quad(
        lambda y: (best - y) * math.exp(-0.5 * ((y - mu) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi)),
        -np.inf,
        best,
    )
    assert acq.ei_closed_form(mu, sigma, best) == pytest.approx(val, rel=1e-10)


def test_closed_form_vectorized():
    out = acq.ei_closed_form(np.array([0.0, -1.0, 1.0]), np.array([1.0, 0.0, 0.0]), 0.0)
    np.testing.assert_allclose(out, [1 / math.sqrt(2 * math.pi), 1.0, 0.0])


def test_closed_form_negative_sigma():
    with pytest.raises(InvalidArgument):
        acq.ei_closed_form(0.0, -1.0, 0.0)


def test_closed_form_increasing_in_sigma():
    s = np.linspace(0.01, 5, 200)
    assert np.all(np.diff(acq.ei_closed_form(0.4, s, 0.4)) > 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(0, 20), st.floats(-50, 50))
def test_all_variants_nonnegative(mu, sigma, best):
    assert acq.ei_closed_form(mu, sigma, best) >= 0.0
    base = acq.gumbel_base_draws(200, np.random.default_rng(0))
    assert acq.ei_monte_carlo(ad.GumbelParams(mu, sigma + 1e-3), best, base=base) >= 0.0
    assert acq.ei_laplace(ad.LaplaceParams(mu, 1.0 / (sigma + 1e-3) ** 2), best) >= 0.0


def test_mc_far_below_support():
    q = ad.GumbelParams(1.0, 0.5)
    assert acq.ei_monte_carlo(q, q.loc - 50 * q.scale, n_mc=1000, rng=np.random.default_rng(0)) == pytest.approx(
        0.0, abs=1e-12
    )


def test_mc_matches_quadrature_standard():
    q = ad.GumbelParams(0.0, 1.0)
    base = acq.gumbel_base_draws(1_000_000, np.random.default_rng(11))
    imp = np.maximum(0.0, 0.0 - base)
    se = imp.std() / math.sqrt(imp.size)
    assert abs(acq.ei_monte_carlo(q, 0.0, base=base) - _gumbel_ei_quad(q, 0.0)) < 3 * se


def test_mc_monotone_in_best_with_crn():
    q = ad.GumbelParams(0.2, 0.8)
    base = acq.gumbel_base_draws(1000, np.random.default_rng(2))
    vals = [acq.ei_monte_carlo(q, b, base=base) for b in np.linspace(-3, 3, 50)]
    assert np.all(np.diff(vals) >= 0)


def test_mc_error_shrinks_with_samples():
    q = ad.GumbelParams(0.0, 1.0)
    exact = _gumbel_ei_quad(q, 0.5)
    med_err = []
    for n in (10**3, 10**4, 10**5, 10**6):
        errs = [
            abs(acq.ei_monte_carlo(q, 0.5, n_mc=n, rng=np.random.default_rng(1000 * n + r)) - exact)
            for r in range(3)
        ]
        med_err.append(np.median(errs))
    assert np.all(np.diff(med_err) < 0)


def test_mc_batch_matches_scalar():
    base = acq.gumbel_base_draws(500, np.random.default_rng(3))
    loc = np.array([0.0, 0.5, -1.0])
    scale = np.array([1.0, 0.2, 2.0])
    out = acq.ei_monte_carlo_batch(loc, scale, 0.3, base)
    exp = [acq.ei_monte_carlo(ad.GumbelParams(a, b), 0.3, base=base) for a, b in zip(loc, scale)]
    np.testing.assert_allclose(out, exp, rtol=1e-12)


def test_mc_requires_draws():
    with pytest.raises(InvalidArgument):
        acq.ei_monte_carlo(ad.GumbelParams(0.0, 1.0), 0.0)


def test_laplace_at_mode():
    assert acq.ei_laplace(ad.LaplaceParams(0.0, 1.0), 0.0) == pytest.approx(0.3989422804014327, abs=1e-15)


def test_laplace_point_mass_limit():
    assert acq.ei_laplace(ad.LaplaceParams(-0.7, 1e16), 0.5) == pytest.approx(1.2, abs=1e-7)


@pytest.mark.parametrize("m1,s1,best", [(0.0, 1.0, 0.2), (2.0, 0.5, 1.0), (-1.0, 3.0, 4.0)])
def test_laplace_single_component_exact(m1, s1, best):
    lp = ad.laplace_fit(ad.MaxGaussianParams([m1], [s1]))
    assert acq.ei_laplace(lp, best) == pytest.approx(acq.ei_closed_form(m1, s1, best), abs=1e-12)
