import math

import mpmath
import numpy as np
import pytest

from hyperfade import cascade, ipl, solver
from hyperfade.errors import DomainError, MomentDivergenceError

PAIRS = {
    "equal_0.25_2": cascade.make_pair(ipl.make_ipl(0.25, 2.0)),
    "theorem_0.05": solver.equal_channel_params(0.05),
    "theorem_0.3159": solver.equal_channel_params(0.3159),
    "mixed": cascade.make_pair(ipl.make_ipl(0.5, 1.5, 2.0), ipl.make_ipl(1.2, 3.0, 0.5)),
}


@pytest.fixture(params=sorted(PAIRS))
def pair(request):
    return PAIRS[request.param]


def test_foxh_matches_direct_over_three_decades(pair):
    z = np.logspace(-2, 1, 16)
    a = cascade.product_pdf_foxh(pair, z)
    b = cascade.product_pdf_direct(pair, z)
    assert np.max(np.abs(a - b) / b) < 1e-4


def test_foxh_wide_strip_small_alpha():
    # tail power 500: the contour strip is very wide and a fixed abscissa cancels badly
    pair = solver.equal_channel_params(0.001)
    z = np.array([0.3, 0.6, 0.8, 1.2])
    a = cascade.product_pdf_foxh(pair, z)
    b = cascade.product_pdf_direct(pair, z)
    assert np.allclose(a, b, rtol=1e-6)


def test_bare_scale_constant_is_not_the_density():
    # with the bare normalisers (no 1/beta powers) the H form misses the density
    p = ipl.make_ipl(0.25, 2.0)
    pair = cascade.make_pair(p)
    spec = cascade.foxh_spec(pair)
    bare = math.sqrt(p.g_norm * p.g_norm / (p.omega * p.omega))
    assert not math.isclose(spec.arg_scale, bare, rel_tol=1e-3)
    pref = -2 * math.lgamma(p.alpha)
    wrong = cascade.fox_h(spec, bare * 1.0, None, pref) / 1.0
    right = cascade.product_pdf_direct(pair, 1.0)
    assert abs(wrong - right) / right > 0.1


def test_mellin_transform_of_density(pair):
    # int z**(s-1) f(z) dz must equal E{Z**(s-1)}; oracle is mpmath quadrature of the Fox H pdf
    for r in (0.5, 1.0):
        f = lambda lz: mpmath.exp((r + 1) * lz) * cascade.product_pdf_foxh(pair, float(mpmath.exp(lz)))
        lo, hi = math.log(1e-6), math.log(1e3)
        num = float(mpmath.quad(f, np.linspace(lo, hi, 9).tolist()))
        want = cascade.product_moment(pair, r)
        assert num == pytest.approx(want, rel=2e-3)


def test_saddle_inside_strip(pair):
    spec = cascade.foxh_spec(pair)
    lo, hi = spec.strip
    for lx in (-20.0, -1.0, 0.0, 1.0, 20.0):
        c = spec.saddle_abscissa(lx)
        assert lo < c < hi
    lo2, hi2 = spec.strip
    assert lo2 < spec.default_abscissa() < hi2


def test_abscissa_outside_strip_rejected():
    pair = PAIRS["equal_0.25_2"]
    spec = cascade.foxh_spec(pair)
    with pytest.raises(DomainError):
        cascade.fox_h(spec, 1.0, c=spec.strip[1] + 0.1)


def test_direct_pdf_normalised(pair):
    law = cascade.product_law(pair)
    trap = np.trapezoid if hasattr(np, "trapezoid") else np.trapz
    mass = float(trap(law.density_log, law.log_z))
    assert mass == pytest.approx(1.0, abs=1e-12)
    # node values agree with the direct integral; deep in the lower tail the
    # truncated link supports cost a few 1e-5 relative
    idx = np.linspace(0, law.log_z.size - 1, 7).astype(int)[1:-1]
    b = cascade.product_pdf_direct(pair, law.z[idx])
    assert np.allclose(law.pdf[idx], b, rtol=1e-4)
    assert np.allclose(law.pdf[idx[2:]], b[2:], rtol=1e-8)


def test_moments_are_products():
    p, q = ipl.make_ipl(0.5, 1.5, 2.0), ipl.make_ipl(1.2, 3.0, 0.5)
    pair = cascade.make_pair(p, q)
    for r in (-0.4, 0.5, 1.0, 2.0, 2.5):
        assert cascade.product_moment(pair, r) == pytest.approx(
            ipl.moment_envelope(p, r) * ipl.moment_envelope(q, r), rel=1e-13
        )
    assert cascade.product_moment(pair, 2.0) == 1.0


def test_moment_divergence_names_link():
    pair = cascade.make_pair(ipl.make_ipl(0.5, 5.0), ipl.make_ipl(0.5, 1.2))
    with pytest.raises(MomentDivergenceError) as exc:
        cascade.product_moment(pair, 2.5)
    assert exc.value.param == "dest"


def test_kappa_equal_links_is_squared_bracket():
    for a0 in (0.01, 0.1, 0.3):
        a = mpmath.mpf(a0)
        br = mpmath.gamma(1 - 2 * a) * mpmath.gamma(a) * mpmath.gamma(3 * a) / (
            mpmath.gamma(1 - a) ** 2 * mpmath.gamma(2 * a) ** 2
        )
        pair = solver.equal_channel_params(a0)
        assert cascade.kappa(pair) == pytest.approx(float(br**2), rel=1e-12)
        assert cascade.kappa_minus_1(pair) == pytest.approx(float(br**2 - 1), rel=1e-11)


def test_kappa_minus_1_small_without_cancellation():
    # nearly deterministic links: kappa - 1 is tiny but resolved
    pair = cascade.make_pair(ipl.make_ipl(200.0, 200.0))
    km1 = cascade.kappa_minus_1(pair)
    assert 0 < km1 < 1e-3
    assert km1 == pytest.approx(cascade.kappa(pair) - 1.0, rel=1e-6)


def test_laplace_transform(pair):
    # oracle: quadrature of exp(-u z) against the tabulated density
    law = cascade.product_law(pair)
    trap = np.trapezoid if hasattr(np, "trapezoid") else np.trapz
    for u in (0.1, 1.0, 5.0):
        want = float(trap(np.exp(-u * law.z) * law.density_log, law.log_z))
        assert cascade.laplace_transform_product(pair, u) == pytest.approx(want, rel=1e-8)
    assert cascade.laplace_transform_product(pair, 0.0) == 1.0
    # small u: 1 - L(u) ~ u E{Z}
    u = 1e-6
    got = (1.0 - cascade.laplace_transform_product(pair, u)) / u
    assert got == pytest.approx(cascade.product_moment(pair, 1.0), rel=1e-3)


def test_char_fn_properties(pair):
    t = np.array([0.0, 0.3, 1.0, 5.0, 40.0])
    phi = cascade.char_fn_product(pair, t)
    assert phi[0] == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.abs(phi) <= 1.0 + 1e-12)
    h = 1e-5
    d = (cascade.char_fn_product(pair, h) - cascade.char_fn_product(pair, -h)) / (2 * h)
    # piecewise-linear density between log-spaced nodes: O(step**2) bias in the mean
    assert d.imag == pytest.approx(cascade.product_moment(pair, 1.0), rel=1e-4)
    assert cascade.char_fn_product(pair, -1.0) == pytest.approx(np.conj(phi[2]), abs=1e-15)


def test_char_fn_against_monte_carlo():
    pair = PAIRS["theorem_0.3159"]
    z = cascade.sample_product(pair, 5, 400_000)
    for t in (0.5, 2.0):
        e = np.exp(1j * t * z)
        phi = cascade.char_fn_product(pair, t)
        se = math.sqrt(np.var(e.real) / z.size) + math.sqrt(np.var(e.imag) / z.size)
        assert abs(phi - e.mean()) < 4 * se


def test_cdf_product_against_samples(pair):
    z = np.sort(cascade.sample_product(pair, 3, 100_000))
    n = z.size
    f = cascade.cdf_product(pair, z)
    i = np.arange(1, n + 1)
    ks = max(np.max(i / n - f), np.max(f - (i - 1) / n))
    assert ks < 1.63 / math.sqrt(n)
    assert np.all(np.diff(cascade.cdf_product(pair, np.logspace(-4, 3, 100))) >= 0)


def test_sampling_deterministic():
    pair = PAIRS["mixed"]
    assert np.array_equal(cascade.sample_product(pair, 9, 1000), cascade.sample_product(pair, 9, 1000))
    with pytest.raises(DomainError):
        cascade.sample_product(pair, 9, 0)


def test_domain_errors():
    pair = PAIRS["mixed"]
    with pytest.raises(DomainError):
        cascade.product_pdf_foxh(pair, -1.0)
    with pytest.raises(DomainError):
        cascade.product_pdf_direct(pair, 0.0)
    with pytest.raises(DomainError):
        cascade.laplace_transform_product(pair, -1.0)
