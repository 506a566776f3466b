"""Single-element cascade channel Z = |h_s| |h_d|.

Two independent routes to the density are provided: the Mellin-Barnes
(Fox H) form evaluated on a vertical contour, and the product-convolution
integral evaluated in the log domain.  Transforms of Z (Laplace, characteristic
function) are computed numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, signal, special
from scipy.integrate import cumulative_trapezoid

from . import ipl
from .errors import DomainError, MomentDivergenceError, NonConvergenceError
from .ipl import IplParams
from .numerics import integrate_adaptive, integrate_vertical_contour, tanh_sinh_unit
from .rng import make_rng


@dataclass(frozen=True)
class CascadePair:
    source: IplParams
    dest: IplParams

    @property
    def links(self):
        return (("source", self.source), ("dest", self.dest))


def make_pair(source: IplParams, dest: IplParams | None = None) -> CascadePair:
    return CascadePair(source, source if dest is None else dest)


# ----------------------------------------------------------------------------
# Fox H representation
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class FoxHSpec:
    m: int
    n: int
    p: int
    q: int
    upper: tuple  # ((a, A), ...)
    lower: tuple  # ((b, B), ...)
    arg_scale: float

    @property
    def strip(self):
        """Open interval of admissible contour abscissae."""
        lo = max(-b / B for b, B in self.lower[: self.m])
        hi = min((1.0 - a) / A for a, A in self.upper[: self.n])
        return lo, hi

    @property
    def decay_rate(self):
        total = sum(B for _, B in self.lower) + sum(A for _, A in self.upper)
        return 0.5 * math.pi * total

    def default_abscissa(self):
        lo, hi = self.strip
        margin = 0.05 * (hi - lo)
        left = max(0.0, lo + margin)
        right = hi - margin
        c = 0.5 * (left + right)
        return min(max(c, lo + margin), right)

    def saddle_abscissa(self, log_x: float):
        """Real c minimising |kernel(c) x**-c| inside the strip.

        The log-kernel is convex on the real segment, so the minimiser is
        unique; centring the contour there avoids the cancellation a fixed
        abscissa suffers when x is far from 1.
        """
        lo, hi = self.strip
        # the kernel has poles at both strip edges, so the minimum is interior
        margin = 1e-9 * (hi - lo)
        res = optimize.minimize_scalar(
            lambda c: float(np.real(self.log_kernel(c))) - c * log_x,
            bounds=(lo + margin, hi - margin),
            method="bounded",
            options={"xatol": 1e-10 * (hi - lo)},
        )
        return float(res.x)

    def log_kernel(self, s):
        """Sum of log-gammas forming the Mellin-Barnes kernel at ``s``."""
        out = 0.0
        for b, B in self.lower[: self.m]:
            out = out + special.loggamma(b + B * s)
        for a, A in self.upper[: self.n]:
            out = out + special.loggamma(1.0 - a - A * s)
        return out


def foxh_spec(pair: CascadePair) -> FoxHSpec:
    """The H^{2,2}_{2,2} instance whose kernel is the Mellin transform of Z.

    The argument multiplier is sqrt(g_s**(1/b_s) g_d**(1/b_d) / (W_s W_d)):
    each link's normalising constant enters with power 1/b, as required for
    the kernel to reproduce E{Z**(s-1)}.
    """
    s, d = pair.source, pair.dest
    log_scale = 0.5 * (
        s.log_g_norm / s.beta + d.log_g_norm / d.beta - math.log(s.omega) - math.log(d.omega)
    )
    return FoxHSpec(
        m=2, n=2, p=2, q=2,
        upper=((0.0, 1.0 / (2.0 * s.beta)), (0.0, 1.0 / (2.0 * d.beta))),
        lower=((s.alpha, 1.0 / (2.0 * s.beta)), (d.alpha, 1.0 / (2.0 * d.beta))),
        arg_scale=math.exp(log_scale),
    )


def fox_h(spec: FoxHSpec, x: float, c: float | None = None, log_prefactor: float = 0.0):
    """exp(log_prefactor) * H(x) by vertical-contour quadrature.

    ``c`` defaults to the saddle abscissa for this ``x``.
    """
    log_x = math.log(x)
    if c is None:
        c = spec.saddle_abscissa(log_x)
    lo, hi = spec.strip
    if not lo < c < hi:
        raise DomainError(f"contour abscissa {c} outside the strip ({lo}, {hi})", param="c")

    def theta(s):
        return np.exp(spec.log_kernel(s) - s * log_x + log_prefactor)

    scale = abs(complex(theta(np.array([complex(c)]))[0]))
    return integrate_vertical_contour(
        theta, c, tol=max(scale * 1e-14, 1e-300), rtol=1e-11, decay_rate=spec.decay_rate
    )


def product_pdf_foxh(pair: CascadePair, z, c: float | None = None):
    """Density of Z via the Fox H form H(k z) / (z G(a_s) G(a_d))."""
    spec = foxh_spec(pair)
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(~(z_arr > 0)):
        raise DomainError("z must be > 0", param="z")
    pref = -(special.gammaln(pair.source.alpha) + special.gammaln(pair.dest.alpha))
    out = np.array([fox_h(spec, spec.arg_scale * zz, c, pref) / zz for zz in z_arr])
    return float(out[0]) if np.ndim(z) == 0 else out


# ----------------------------------------------------------------------------
# Direct product integral
# ----------------------------------------------------------------------------

def _log_support(p: IplParams, eps=1e-15):
    lo = float(ipl.log_quantile_from_log_u(p, math.log(eps)))
    hi = float(ipl.log_quantile_from_log_u(p, math.log1p(-eps)))
    return lo, hi


def product_pdf_direct(pair: CascadePair, z, tol: float = 1e-11):
    """Density of Z from the product integral f_s(x) f_d(z/x) dx/x.

    With v = ln x the integrand becomes a convolution of the two log-envelope
    densities, which is smooth and decays exponentially at both ends.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(~(z_arr > 0)):
        raise DomainError("z must be > 0", param="z")
    s, d = pair.source, pair.dest
    lo, hi = _log_support(s)
    grid = np.linspace(lo, hi, 400)
    out = np.empty_like(z_arr)
    for i, zz in enumerate(z_arr):
        lz = math.log(zz)

        def log_integrand(v):
            return ipl.log_density_log_envelope(s, v) + ipl.log_density_log_envelope(d, lz - v)

        vals = log_integrand(grid)
        k = int(np.argmax(vals))
        peak = float(grid[k])
        ref = float(vals[k])

        def integrand(v):
            return math.exp(float(log_integrand(v)) - ref)

        total = 0.0
        for a, b in ((-math.inf, peak), (peak, math.inf)):
            try:
                res = integrate_adaptive(integrand, a, b, tol=tol, abs_tol=1e-300)
            except NonConvergenceError as exc:
                exc.info.update(z=float(zz))
                raise
            total += res.value
        out[i] = total * math.exp(ref) / zz
    return float(out[0]) if np.ndim(z) == 0 else out


# ----------------------------------------------------------------------------
# Moments
# ----------------------------------------------------------------------------

def log_product_moment(pair: CascadePair, r: float) -> float:
    total = 0.0
    for name, link in pair.links:
        try:
            total += ipl.log_moment_envelope(link, r)
        except MomentDivergenceError as exc:
            raise MomentDivergenceError(
                f"{name} link: {exc}", order=r, valid_range=exc.valid_range, param=name
            ) from None
    return total


def product_moment(pair: CascadePair, r: float) -> float:
    """E{Z**r} = E{|h_s|**r} E{|h_d|**r} for independent links."""
    if r == 2:
        log_product_moment(pair, r)
        return pair.source.omega * pair.dest.omega
    return math.exp(log_product_moment(pair, r))


def kappa(pair: CascadePair) -> float:
    """E{Z**2} / E{Z}**2."""
    return math.exp(log_product_moment(pair, 2.0) - 2.0 * log_product_moment(pair, 1.0))


def kappa_minus_1(pair: CascadePair) -> float:
    return math.expm1(log_product_moment(pair, 2.0) - 2.0 * log_product_moment(pair, 1.0))


# ----------------------------------------------------------------------------
# Transforms
# ----------------------------------------------------------------------------

def _tanh_sinh_log_quantiles(p: IplParams, level: int):
    x, xc, w = tanh_sinh_unit(level)
    with np.errstate(divide="ignore"):
        log_u = np.where(x < 0.5, np.log(x), np.log1p(-np.minimum(xc, 0.5)))
    return ipl.log_quantile_from_log_u(p, log_u), w


def laplace_transform_product(pair: CascadePair, u: float, rtol: float = 1e-12) -> float:
    """E{exp(-u Z)} by tensor tanh-sinh quadrature over both quantile axes."""
    if not u >= 0:
        raise DomainError("u must be >= 0", param="u")
    if u == 0:
        return 1.0
    return 1.0 - _laplace_complement(pair, u, rtol)


def _laplace_complement(pair: CascadePair, u: float, rtol: float) -> float:
    """1 - E{exp(-u Z)} without cancellation."""
    previous = None
    for level in range(3, 11):
        lq_s, w_s = _tanh_sinh_log_quantiles(pair.source, level)
        lq_d, w_d = _tanh_sinh_log_quantiles(pair.dest, level)
        with np.errstate(over="ignore"):
            z = np.exp(lq_s[:, None] + lq_d[None, :])
        vals = -np.expm1(-u * z)
        total = float(w_s @ vals @ w_d)
        if previous is not None and abs(total - previous) <= rtol * abs(total):
            return total
        previous = total
    raise NonConvergenceError("Laplace transform quadrature did not converge", estimate=previous)


@dataclass(frozen=True)
class ProductLaw:
    """Tabulated law of Z on a uniform grid in ln z."""

    log_z: np.ndarray
    density_log: np.ndarray  # density of ln Z
    cdf: np.ndarray

    @property
    def z(self):
        return np.exp(self.log_z)

    @property
    def pdf(self):
        return self.density_log / self.z


@lru_cache(maxsize=32)
def product_law(pair: CascadePair, step: float | None = None) -> ProductLaw:
    """Log-domain convolution of the two log-envelope densities.

    The trapezoid rule on a uniform grid is spectrally accurate here since
    both log-densities are smooth and decay exponentially.
    """
    s, d = pair.source, pair.dest
    if step is None:
        step = min(0.01, 1.0 / (20.0 * max(s.beta, d.beta)))
    lo_s, hi_s = _log_support(s, 1e-14)
    lo_d, hi_d = _log_support(d, 1e-14)
    v_s = lo_s + step * np.arange(int(math.ceil((hi_s - lo_s) / step)) + 1)
    v_d = lo_d + step * np.arange(int(math.ceil((hi_d - lo_d) / step)) + 1)
    g_s = np.exp(ipl.log_density_log_envelope(s, v_s))
    g_d = np.exp(ipl.log_density_log_envelope(d, v_d))
    if g_s.size * g_d.size <= 2 * 10**8:
        g = np.convolve(g_s, g_d) * step
    else:
        g = np.clip(signal.fftconvolve(g_s, g_d) * step, 0.0, None)
    log_z = v_s[0] + v_d[0] + step * np.arange(g.size)
    keep = np.flatnonzero(g > 1e-15 * g.max())
    g = g[keep[0] : keep[-1] + 1]
    log_z = log_z[keep[0] : keep[-1] + 1]
    cdf = cumulative_trapezoid(g, log_z, initial=0.0)
    mass = cdf[-1]
    g = g / mass
    cdf = cdf / mass
    for arr in (log_z, g, cdf):
        arr.setflags(write=False)
    return ProductLaw(log_z, g, cdf)


def cdf_product(pair: CascadePair, z):
    """CDF of Z interpolated from the tabulated law."""
    law = product_law(pair)
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.interp(np.log(z), law.log_z, law.cdf, left=0.0, right=1.0)
    return float(out) if out.ndim == 0 else out


_SERIES_N = np.arange(8)
_FACT = np.array([math.factorial(k) for k in range(8)], dtype=float)


def _filon_weights(theta):
    """E1 = int_0^1 (1-x) e^{i theta x} dx and E2 = int_0^1 x e^{i theta x} dx."""
    small = np.abs(theta) < 0.1
    th = np.where(small, 1.0, theta)
    e = np.exp(1j * th)
    e2 = e / (1j * th) + (e - 1.0) / th**2
    e1 = (e - 1.0) / (1j * th) - e2
    if np.any(small):
        ts = np.where(small, theta, 0.0)[..., None]
        powers = (1j * ts) ** _SERIES_N / _FACT
        s2 = np.sum(powers / (_SERIES_N + 2.0), axis=-1)
        s1 = np.sum(powers / ((_SERIES_N + 1.0) * (_SERIES_N + 2.0)), axis=-1)
        e1 = np.where(small, s1, e1)
        e2 = np.where(small, s2, e2)
    return e1, e2


def char_fn_from_law(law: ProductLaw, t, chunk_elems: int = 2_000_000):
    """E{exp(i t Z)} by Filon integration of the piecewise-linear density.

    Normalised by the rule's own mass so that the value at t = 0 is exactly 1.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    z = law.z
    f = law.pdf
    dz = np.diff(z)
    z0 = z[:-1]
    mass = 0.5 * np.sum(dz * (f[:-1] + f[1:]))
    out = np.empty(t.size, dtype=complex)
    rows = max(1, chunk_elems // dz.size)
    for start in range(0, t.size, rows):
        tt = t[start : start + rows, None]
        e1, e2 = _filon_weights(tt * dz[None, :])
        seg = dz * (f[:-1] * e1 + f[1:] * e2) * np.exp(1j * tt * z0[None, :])
        out[start : start + rows] = seg.sum(axis=1)
    return out / mass


def char_fn_product(pair: CascadePair, t):
    """Characteristic function of Z (Filon quadrature over the tabulated law)."""
    out = char_fn_from_law(product_law(pair), t)
    return complex(out[0]) if np.ndim(t) == 0 else out


def sample_product(pair: CascadePair, seed, n: int, stream: int = 0) -> np.ndarray:
    if n < 1:
        raise DomainError("n must be >= 1", param="n")
    rng = make_rng(seed, stream)
    return sample_product_with(pair, rng, n)


def sample_product_with(pair: CascadePair, rng: np.random.Generator, n: int) -> np.ndarray:
    xs = ipl.sample_with(pair.source, rng, n)
    xd = ipl.sample_with(pair.dest, rng, n)
    return xs * xd
