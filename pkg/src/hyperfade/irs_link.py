"""Statistics of the N-element IRS link h = sum_j Z_j and its SNR.

Two descriptions of the sum law live here:

* a moment-matched Gamma law for the envelope (shape ``alpha_hat`` =
  N / (kappa - 1)), whose SNR image gamma = gbar * h**2 / E{h**2} has the
  density f(g) = c**(a/2) g**(a/2 - 1) exp(-sqrt(c g)) / (2 G(a)) with
  c = a (a + 1) / gbar;
* a numerically exact law obtained by inverting phi_Z(t)**N with the
  Gil-Pelaez formula.  It is a numerical reconstruction, not a closed form.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline

from . import cascade
from .cascade import CascadePair
from .errors import DomainError, NonConvergenceError
from .numerics import gauss_legendre, integrate_adaptive, reg_lower_inc_gamma
from .rng import make_rng, split_counts, worker_seeds


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class IrsLinkModel:
    pair: CascadePair
    n_irs: int
    gbar_sigma: float = 1.0

    def __post_init__(self):
        if int(self.n_irs) != self.n_irs or self.n_irs < 1:
            raise DomainError(f"n_irs must be an integer >= 1, got {self.n_irs!r}", param="n_irs")
        if not (np.isfinite(self.gbar_sigma) and self.gbar_sigma > 0):
            raise DomainError("gbar_sigma must be > 0", param="gbar_sigma")

    @property
    def second_moment(self) -> float:
        """E{h**2} = N E{Z**2} + N (N - 1) E{Z}**2 for independent elements."""
        n = self.n_irs
        m1 = cascade.product_moment(self.pair, 1.0)
        m2 = cascade.product_moment(self.pair, 2.0)
        return n * m2 + n * (n - 1) * m1 * m1


@dataclass(frozen=True)
class GammaApprox:
    alpha_hat: float
    mean_h: float
    var_h: float
    omega_h: float

    @property
    def scale(self) -> float:
        return self.var_h / self.mean_h


def gamma_approx(model: IrsLinkModel) -> GammaApprox:
    """Gamma law matching the mean and variance of h."""
    n = model.n_irs
    km1 = cascade.kappa_minus_1(model.pair)
    alpha_hat = n / km1
    mean_h = n * cascade.product_moment(model.pair, 1.0)
    var_h = mean_h * mean_h / alpha_hat
    scale = var_h / mean_h
    omega_h = alpha_hat * (alpha_hat + 1.0) * scale * scale
    return GammaApprox(alpha_hat, mean_h, var_h, omega_h)


def approx_from_alpha_hat(alpha_hat: float) -> GammaApprox:
    """Unit-scale Gamma law with a given shape (for SNR-only calculations)."""
    if not alpha_hat > 0:
        raise DomainError("alpha_hat must be > 0", param="alpha_hat")
    a = float(alpha_hat)
    return GammaApprox(a, a, a, a * (a + 1.0))


# ----------------------------------------------------------------------------
# Gamma-approximation envelope and SNR laws
# ----------------------------------------------------------------------------

def sum_pdf_approx(ga: GammaApprox, h):
    h = np.asarray(h, dtype=float)
    if np.any(~(h > 0)):
        raise DomainError("h must be > 0", param="h")
    a, th = ga.alpha_hat, ga.scale
    out = np.exp((a - 1.0) * np.log(h) - h / th - special.gammaln(a) - a * math.log(th))
    return float(out) if out.ndim == 0 else out


def sum_cdf_approx(ga: GammaApprox, h):
    h = np.asarray(h, dtype=float)
    if np.any(~(h >= 0)):
        raise DomainError("h must be >= 0", param="h")
    return reg_lower_inc_gamma(ga.alpha_hat, h / ga.scale)


def _snr_rate(ga: GammaApprox, gbar_sigma: float) -> float:
    if not gbar_sigma > 0:
        raise DomainError("gbar_sigma must be > 0", param="gbar_sigma")
    a = ga.alpha_hat
    return a * (a + 1.0) / gbar_sigma


def snr_pdf_approx(ga: GammaApprox, gbar_sigma: float, gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(~(g > 0)):
        raise DomainError("gamma must be > 0", param="gamma")
    a = ga.alpha_hat
    c = _snr_rate(ga, gbar_sigma)
    log_f = (
        -math.log(2.0) - special.gammaln(a) + 0.5 * a * math.log(c)
        + (0.5 * a - 1.0) * np.log(g) - np.sqrt(c * g)
    )
    out = np.exp(log_f)
    return float(out) if out.ndim == 0 else out


def outage_exact_approx(ga: GammaApprox, gbar_sigma: float, gamma_th):
    """P(gamma < gamma_th) = P(a, sqrt(a (a + 1) gamma_th / gbar))."""
    g = np.asarray(gamma_th, dtype=float)
    if np.any(~(g > 0)):
        raise DomainError("gamma_th must be > 0", param="gamma_th")
    c = _snr_rate(ga, gbar_sigma)
    return reg_lower_inc_gamma(ga.alpha_hat, np.sqrt(c * g))


snr_cdf_approx = outage_exact_approx


def outage_asymptotic(ga: GammaApprox, gbar_sigma: float, gamma_th):
    """High-SNR outage (a (a + 1))**(a/2) / G(a + 1) * (gamma_th / gbar)**(a/2)."""
    g = np.asarray(gamma_th, dtype=float)
    if np.any(~(g > 0)):
        raise DomainError("gamma_th must be > 0", param="gamma_th")
    if not gbar_sigma > 0:
        raise DomainError("gbar_sigma must be > 0", param="gbar_sigma")
    a = ga.alpha_hat
    log_coef = 0.5 * a * math.log(a * (a + 1.0)) - special.gammaln(a + 1.0)
    out = np.exp(log_coef + 0.5 * a * (np.log(g) - math.log(gbar_sigma)))
    return float(out) if out.ndim == 0 else out


def ergodic_capacity_approx(ga: GammaApprox, gbar_sigma: float, tol: float = 1e-11) -> float:
    """E{log2(1 + gamma)} in bits/s/Hz under the Gamma-approximation SNR law.

    Integrated over the envelope variable v ~ Gamma(a, 1), gamma = gbar v**2 / (a (a + 1)).
    """
    if not gbar_sigma > 0:
        raise DomainError("gbar_sigma must be > 0", param="gbar_sigma")
    a = ga.alpha_hat
    k = gbar_sigma / (a * (a + 1.0))
    log_norm = special.gammaln(a)

    def integrand(v):
        if v <= 0:
            return 0.0
        return math.log1p(k * v * v) * math.exp((a - 1.0) * math.log(v) - v - log_norm)

    total = 0.0
    for lo, hi in ((0.0, a), (a, math.inf)):
        total += integrate_adaptive(integrand, lo, hi, tol=tol, abs_tol=1e-300).value
    return total / math.log(2.0)


# ----------------------------------------------------------------------------
# Numerically exact sum law
# ----------------------------------------------------------------------------

def _poly_moments(theta):
    """M_j = int_0^1 x**j exp(i theta x) dx for j = 0..3."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 1.0
    th = np.where(small, 1.0, theta)
    e = np.exp(1j * th)
    m = [(e - 1.0) / (1j * th)]
    for j in range(1, 4):
        m.append((e - j * m[-1]) / (1j * th))
    if np.any(small):
        n = np.arange(24)
        fact = np.cumprod(np.r_[1.0, np.arange(1, 24, dtype=float)])
        powers = (1j * np.where(small, theta, 0.0)[..., None]) ** n / fact
        for j in range(4):
            series = np.sum(powers / (n + j + 1.0), axis=-1)
            m[j] = np.where(small, series, m[j])
    return m


@dataclass(frozen=True)
class _InversionTable:
    t_head: np.ndarray  # Gauss nodes on (0, t0)
    w_head: np.ndarray
    phi_head: np.ndarray  # phi_Z**N at the head nodes
    t: np.ndarray  # spline knots on [t0, T]
    coef: np.ndarray  # per-segment cubic coefficients of phi**N / t in x = (t - t_k) / dt_k
    tail_bound: float


def _inversion_grid(t0, omega, t_max, ratio=0.02):
    """Knots: geometric up to the oscillation scale, uniform across it, geometric after."""
    step = 0.3 / omega
    t_osc, t_lin = step / ratio, 50.0 / omega
    geo = t0 * (1.0 + ratio) ** np.arange(int(math.log(t_osc / t0) / math.log1p(ratio)) + 1)
    uni = geo[-1] + step * np.arange(1, int((t_lin - geo[-1]) / step) + 2)
    return np.concatenate([geo, uni])


@lru_cache(maxsize=16)
def _inversion_table(
    pair: CascadePair, n_irs: int, tail_tol: float = 1e-9, t_max: float = 1e7
) -> _InversionTable:
    law = cascade.product_law(pair)
    m1 = cascade.product_moment(pair, 1.0)
    m2 = cascade.product_moment(pair, 2.0)
    omega = math.sqrt(n_irs * n_irs * m1 * m1 + n_irs * m2)
    t0 = 0.005 / omega
    x, w = gauss_legendre(16)
    t_head = 0.5 * t0 * (x + 1.0)
    w_head = 0.5 * t0 * w
    phi_head = cascade.char_fn_from_law(law, t_head) ** n_irs

    grids = [_inversion_grid(t0, omega, t_max)]
    values = [cascade.char_fn_from_law(law, grids[0]) ** n_irs]
    ratio = 1.02
    while True:
        t_end = grids[-1][-1]
        tail = abs(values[-1][-1]) / t_end
        if tail < tail_tol:
            break
        if t_end > t_max:
            raise NonConvergenceError(
                "characteristic function did not decay before the truncation limit",
                info={"T": t_end, "tail_bound": tail, "n_irs": n_irs},
            )
        nxt = t_end * ratio ** np.arange(1, 101)
        grids.append(nxt)
        values.append(cascade.char_fn_from_law(law, nxt) ** n_irs)
    t = np.concatenate(grids)
    a = np.concatenate(values) / t
    spline = CubicSpline(t, a)
    dt = np.diff(t)
    c = spline.c  # c[0] d**3 + c[1] d**2 + c[2] d + c[3]
    coef = np.stack([c[3], c[2] * dt, c[1] * dt**2, c[0] * dt**3])
    return _InversionTable(t_head, w_head, phi_head, t, coef, tail)


def sum_cdf_numeric(model: IrsLinkModel, h):
    """CDF of h = sum of N i.i.d. Z by Gil-Pelaez inversion of phi_Z**N.

    F(h) = 1/2 - (1/pi) int_0^inf Im[exp(-i t h) phi(t)**N] / t dt.  The
    head (0, t0) uses Gauss-Legendre; beyond it phi**N / t is represented by
    a cubic spline whose pieces are integrated against exp(-i t h) exactly.
    """
    h_arr = np.atleast_1d(np.asarray(h, dtype=float))
    if np.any(~(h_arr > 0)):
        raise DomainError("h must be > 0", param="h")
    tab = _inversion_table(model.pair, int(model.n_irs))
    dt = np.diff(tab.t)
    out = np.empty_like(h_arr)
    for i, hh in enumerate(h_arr):
        head = np.sum(tab.w_head * np.imag(np.exp(-1j * tab.t_head * hh) * tab.phi_head) / tab.t_head)
        mom = _poly_moments(-hh * dt)
        seg = sum(tab.coef[j] * mom[j] for j in range(4))
        body = np.sum(dt * np.exp(-1j * hh * tab.t[:-1]) * seg)
        out[i] = 0.5 - (head + body.imag) / math.pi
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if np.ndim(h) == 0 else out


# ----------------------------------------------------------------------------
# Monte Carlo
# ----------------------------------------------------------------------------

_CHUNK = 1 << 17


def _sum_draws(pair: CascadePair, n_irs: int, rng: np.random.Generator, n: int) -> np.ndarray:
    out = np.empty(n)
    for start in range(0, n, _CHUNK):
        m = min(_CHUNK, n - start)
        acc = np.zeros(m)
        for _ in range(n_irs):
            acc += cascade.sample_product_with(pair, rng, m)
        out[start : start + m] = acc
    return out


def sample_sum(model: IrsLinkModel, seed, n: int, workers: int = 1) -> np.ndarray:
    """Draws of h; bit-reproducible for fixed (seed, n, workers)."""
    if n < 1:
        raise DomainError("n must be >= 1", param="n")
    if workers < 1:
        raise DomainError("workers must be >= 1", param="workers")
    if workers == 1:
        return _sum_draws(model.pair, model.n_irs, make_rng(seed), n)
    seeds = worker_seeds(seed, workers)
    counts = split_counts(n, workers)

    def job(k):
        rng = np.random.Generator(np.random.PCG64(seeds[k]))
        return _sum_draws(model.pair, model.n_irs, rng, counts[k])

    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(job, range(workers)))
    return np.concatenate(parts)


def snr_from_envelope(model: IrsLinkModel, h: np.ndarray, gbar_sigma: float | None = None):
    """gamma = gbar h**2 / E{h**2}, normalised by the analytic second moment."""
    gbar = model.gbar_sigma if gbar_sigma is None else gbar_sigma
    return gbar * np.square(h) / model.second_moment
