"""Inverse power Lomax (IPL) envelope law of a single fading link.

The envelope density is

    f(x) = 2 a b / g * W**b / x**(2b + 1) * (1 + (W / x**2)**b / g)**-(a + 1)

with shape ``a``, tail power ``b``, mean-square envelope ``W`` and the
normalising constant ``g = (G(1 - 1/b) G(a + 1/b) / G(a))**b`` that makes
E{x**2} = W.  Writing ``y = (W / x**2)**b / g`` gives ``y ~ Lomax(a)``,
from which the CDF ``(1 + y)**-a``, the quantile and the fractional
moments follow in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, MomentDivergenceError
from .rng import make_rng, open_uniform

FULL_HRR_ALPHA_LIMIT = 0.316


def _log_g_norm(alpha, beta):
    return beta * (
        special.gammaln(1.0 - 1.0 / beta)
        + special.gammaln(alpha + 1.0 / beta)
        - special.gammaln(alpha)
    )


@dataclass(frozen=True)
class IplParams:
    """One IPL link.

    ``log_g_norm`` is the stored normalisation; ``g_norm`` exposes it on the
    linear scale (it underflows for tail powers in the thousands, which the
    log form does not).
    """

    alpha: float
    beta: float
    omega: float
    log_g_norm: float

    def __post_init__(self):
        _validate(self.alpha, self.beta, self.omega)
        expected = _log_g_norm(self.alpha, self.beta)
        if not math.isclose(self.log_g_norm, expected, rel_tol=1e-12, abs_tol=1e-12):
            raise DomainError("log_g_norm inconsistent with (alpha, beta)", param="log_g_norm")

    @property
    def g_norm(self) -> float:
        return math.exp(self.log_g_norm)

    @property
    def moment_range(self):
        """Open interval of orders r for which E{x**r} is finite."""
        return (-2.0 * self.alpha * self.beta, 2.0 * self.beta)


def _validate(alpha, beta, omega):
    if not (np.isfinite(alpha) and alpha > 0):
        raise DomainError(f"alpha must be > 0, got {alpha!r}", param="alpha")
    if not (np.isfinite(beta) and beta > 1):
        raise DomainError(f"beta must exceed 1, got {beta!r}", param="beta")
    if not (np.isfinite(omega) and omega > 0):
        raise DomainError(f"omega must be > 0, got {omega!r}", param="omega")


def make_ipl(alpha: float, beta: float, omega: float = 1.0) -> IplParams:
    _validate(alpha, beta, omega)
    alpha, beta, omega = float(alpha), float(beta), float(omega)
    return IplParams(alpha, beta, omega, float(_log_g_norm(alpha, beta)))


def _positive(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"{name} must be > 0", param=name)
    return arr


def _log_y(p: IplParams, log_x):
    return p.beta * (math.log(p.omega) - 2.0 * log_x) - p.log_g_norm


def log_pdf_envelope(p: IplParams, x):
    """Log of the envelope density; accepts arrays."""
    x = _positive(x)
    log_x = np.log(x)
    out = (
        math.log(2.0 * p.alpha * p.beta)
        - p.log_g_norm
        + p.beta * math.log(p.omega)
        - (2.0 * p.beta + 1.0) * log_x
        - (p.alpha + 1.0) * np.logaddexp(0.0, _log_y(p, log_x))
    )
    return float(out) if out.ndim == 0 else out


def log_density_log_envelope(p: IplParams, v):
    """Log-density of ln|h| at ``v`` (i.e. log of x f(x) with x = e**v)."""
    v = np.asarray(v, dtype=float)
    out = (
        math.log(2.0 * p.alpha * p.beta)
        - p.log_g_norm
        + p.beta * math.log(p.omega)
        - 2.0 * p.beta * v
        - (p.alpha + 1.0) * np.logaddexp(0.0, _log_y(p, v))
    )
    return out


def pdf_envelope(p: IplParams, x):
    out = np.exp(log_pdf_envelope(p, x))
    return float(out) if np.ndim(out) == 0 else out


def cdf_envelope(p: IplParams, x):
    x = _positive(x)
    out = np.exp(-p.alpha * np.logaddexp(0.0, _log_y(p, np.log(x))))
    return float(out) if out.ndim == 0 else out


def sf_envelope(p: IplParams, x):
    """Survival function 1 - F(x), accurate in the upper tail."""
    x = _positive(x)
    out = -np.expm1(-p.alpha * np.logaddexp(0.0, _log_y(p, np.log(x))))
    return float(out) if out.ndim == 0 else out


def log_quantile_from_log_u(p: IplParams, log_u):
    """ln Q(u) given ln u; keeps precision for u close to 1."""
    from .numerics import log_expm1

    log_u = np.asarray(log_u, dtype=float)
    return 0.5 * math.log(p.omega) - (p.log_g_norm + log_expm1(-log_u / p.alpha)) / (2.0 * p.beta)


def quantile(p: IplParams, u):
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise DomainError("u must lie in (0, 1)", param="u")
    out = np.exp(log_quantile_from_log_u(p, np.log(u)))
    return float(out) if out.ndim == 0 else out


def sample(p: IplParams, seed, n: int, stream: int = 0) -> np.ndarray:
    """Inverse-CDF draws; identical (seed, stream, n) give identical output."""
    if n < 1:
        raise DomainError("n must be >= 1", param="n")
    rng = make_rng(seed, stream)
    return sample_with(p, rng, n)


def sample_with(p: IplParams, rng: np.random.Generator, n: int) -> np.ndarray:
    u = open_uniform(rng, n)
    return np.exp(log_quantile_from_log_u(p, np.log(u)))


def log_moment_envelope(p: IplParams, r: float) -> float:
    lo, hi = p.moment_range
    if not lo < r < hi:
        raise MomentDivergenceError(
            f"moment of order {r} diverges; finite only for {lo:g} < r < {hi:g}",
            order=r, valid_range=(lo, hi), param="r",
        )
    if r == 0:
        return 0.0
    if r == 2:
        return math.log(p.omega)
    k = r / (2.0 * p.beta)
    return (
        0.5 * r * math.log(p.omega)
        - k * p.log_g_norm
        + special.gammaln(1.0 - k)
        + special.gammaln(p.alpha + k)
        - special.gammaln(p.alpha)
    )


def moment_envelope(p: IplParams, r: float) -> float:
    """E{|h|**r}; r = 2 returns ``omega`` exactly."""
    if r == 2:
        log_moment_envelope(p, r)
        return p.omega
    return math.exp(log_moment_envelope(p, r))


def is_full_hrr_link(alpha: float, beta: float, strict_product: bool = False) -> bool:
    """Per-link full hyper-Rayleigh predicate.

    Default: alpha * beta <= 1 and alpha < 0.316.  ``strict_product``
    requires alpha * beta < 1 instead.
    """
    prod = alpha * beta
    product_ok = prod < 1 if strict_product else prod <= 1
    return bool(product_ok and alpha < FULL_HRR_ALPHA_LIMIT)
