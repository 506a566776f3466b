"""Special functions and numerical engines.

Real special functions and the general-purpose adaptive quadrature /
root finding are thin, validated wrappers over :mod:`scipy`.  The
vertical-contour integrator and the tanh-sinh rule are implemented here
because their truncation and node placement are tied to the integrands of
this package.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, NonConvergenceError

EULER_GAMMA = float(np.euler_gamma)

DEFAULT_TOL = 1e-10
DEFAULT_BUDGET = 10**6


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __float__(self):
        return self.value


# ----------------------------------------------------------------------------
# Special functions
# ----------------------------------------------------------------------------

def ln_gamma(x):
    """Natural log of the gamma function on the positive real axis."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}", param="x")
    out = special.gammaln(arr)
    return float(out) if out.ndim == 0 else out


def ln_gamma_complex(z):
    """Principal branch of log Gamma(z) for complex z.

    Poles at the non-positive integers raise :class:`DomainError`.
    """
    arr = np.asarray(z, dtype=complex)
    on_pole = (arr.imag == 0) & (arr.real <= 0) & (arr.real == np.round(arr.real))
    if np.any(on_pole):
        raise DomainError(f"log-gamma pole at non-positive integer {z!r}", param="z")
    out = special.loggamma(arr)
    return complex(out) if out.ndim == 0 else out


def digamma(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"digamma requires x > 0, got {x!r}", param="x")
    out = special.digamma(arr)
    return float(out) if out.ndim == 0 else out


def _check_inc_gamma_args(a, x):
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(~(a > 0)):
        raise DomainError(f"incomplete gamma requires a > 0, got {a!r}", param="a")
    if np.any(~(x >= 0)):
        raise DomainError(f"incomplete gamma requires x >= 0, got {x!r}", param="x")
    return a, x


def reg_lower_inc_gamma(a, x):
    """P(a, x) = gamma(a, x) / Gamma(a)."""
    a, x = _check_inc_gamma_args(a, x)
    out = special.gammainc(a, x)
    return float(out) if out.ndim == 0 else out


def reg_upper_inc_gamma(a, x):
    """Q(a, x) = 1 - P(a, x), computed without cancellation."""
    a, x = _check_inc_gamma_args(a, x)
    out = special.gammaincc(a, x)
    return float(out) if out.ndim == 0 else out


def log_expm1(w):
    """log(exp(w) - 1) for w > 0 without overflow."""
    w = np.asarray(w, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        small = np.log(np.expm1(np.minimum(w, 30.0)))
    big = w + np.log1p(-np.exp(-np.maximum(w, 30.0)))
    out = np.where(w > 30.0, big, small)
    return float(out) if out.ndim == 0 else out


# ----------------------------------------------------------------------------
# Quadrature
# ----------------------------------------------------------------------------

def integrate_adaptive(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = DEFAULT_TOL,
    budget: int = DEFAULT_BUDGET,
    points=None,
    abs_tol: float | None = None,
) -> QuadratureResult:
    """Adaptive Gauss-Kronrod integration of ``f`` over ``[lo, hi]``.

    ``hi`` may be ``+inf`` (and ``lo`` ``-inf``).  ``tol`` is the relative
    target; the absolute target defaults to ``tol`` as well.  Raises
    :class:`NonConvergenceError` carrying the best estimate if the target
    is not met within ``budget`` integrand evaluations.
    """
    if not tol > 0:
        raise DomainError("tol must be positive", param="tol")
    if abs_tol is None:
        abs_tol = tol
    infinite = math.isinf(lo) or math.isinf(hi)
    limit = max(50, budget // (15 if infinite else 21))
    kwargs = {}
    if points is not None and not infinite:
        kwargs["points"] = points
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(
            f, lo, hi, epsabs=abs_tol, epsrel=tol, limit=limit, full_output=1, **kwargs
        )
    value, err, info = out[0], out[1], out[2]
    neval = int(info.get("neval", 0))
    ier = out[3] if len(out) > 3 else 0
    target = max(abs_tol, tol * abs(value))
    if not np.isfinite(value) or not np.isfinite(err):
        raise NonConvergenceError(
            "integrand produced non-finite values", estimate=value, error=err,
            info={"evaluations": neval},
        )
    if ier and err > 10 * target:
        raise NonConvergenceError(
            f"adaptive quadrature missed target {target:.3g} (error estimate {err:.3g})",
            estimate=value, error=err, info={"evaluations": neval, "ier": ier},
        )
    return QuadratureResult(float(value), float(abs(err)), max(neval, 1))


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(order: int):
    """Nodes and weights of the ``order``-point Gauss-Legendre rule on [-1, 1]."""
    rule = _GL_CACHE.get(order)
    if rule is None:
        rule = np.polynomial.legendre.leggauss(order)
        _GL_CACHE[order] = rule
    return rule


def composite_gauss_legendre(lo, hi, panels, order=20):
    """Nodes and weights of a composite Gauss-Legendre rule on [lo, hi]."""
    x, w = gauss_legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def tanh_sinh_unit(level: int, t_max: float = 3.2):
    """Tanh-sinh rule on (0, 1) with step ``2**-level``.

    Returns ``(x, one_minus_x, weights)``; the complement is computed
    directly so that integrands singular at 1 keep full precision.
    """
    h = 2.0 ** (-level)
    k = np.arange(-int(t_max / h), int(t_max / h) + 1)
    t = k * h
    u = 0.5 * np.pi * np.sinh(t)
    # x = (1 + tanh u)/2 = 1/(1 + e^{-2u}); 1 - x = 1/(1 + e^{2u})
    x = special.expit(2.0 * u)
    xc = special.expit(-2.0 * u)
    w = h * 0.5 * np.pi * np.cosh(t) / (2.0 * np.cosh(u) ** 2)
    keep = (x > 0) & (xc > 0) & (w > 0)
    return x[keep], xc[keep], w[keep]


def integrate_vertical_contour(
    theta: Callable[[np.ndarray], np.ndarray],
    c: float,
    tol: float = 1e-12,
    rtol: float = 1e-10,
    decay_rate: float | None = None,
    symmetric: bool = True,
    complex_result: bool = False,
    t_max: float = 1e6,
    order: int = 20,
):
    """(1/2pi) * integral of theta(c + i t) over the real t axis.

    ``theta`` must accept a complex ndarray.  With ``symmetric=True`` the
    caller asserts theta(c - it) = conj(theta(c + it)) and only the upper
    half line is integrated.  ``decay_rate`` is the rate r of an envelope
    exp(-r |t|); it seeds the truncation point, which is then grown until
    the tail bound |theta(c + iT)| / r falls below ``tol / 10``.

    Returns the real part unless ``complex_result`` is set (which forces the
    full two-sided integration).
    """
    if not tol > 0:
        raise DomainError("tol must be positive", param="tol")
    if complex_result:
        symmetric = False

    def mag(t):
        return abs(complex(theta(np.array([c + 1j * t]))[0]))

    rate = decay_rate
    if rate is None:
        # estimate the exponential rate from two probes
        m1, m2 = mag(1.0), mag(8.0)
        rate = max(math.log(max(m1, 1e-300) / max(m2, 1e-300)) / 7.0, 1e-3)

    scale = max(mag(0.0), 1e-300)
    T = max(1.0, math.log(scale * 10.0 / (tol * rate) + 1.0) / rate)
    while True:
        tail = max(mag(T), mag(-T) if not symmetric else 0.0) / rate
        if tail < tol / 10.0 and mag(2 * T) / rate < tol / 10.0:
            break
        T *= 2.0
        if T > t_max:
            raise NonConvergenceError(
                "contour integrand decay not detected before the truncation limit",
                info={"T": T, "tail": tail},
            )

    lo = 0.0 if symmetric else -T
    panels = max(4, int(math.ceil((T - lo) / 4.0)))
    previous = None
    for _ in range(12):
        t, w = composite_gauss_legendre(lo, T, panels, order)
        vals = theta(c + 1j * t)
        if symmetric:
            total = complex(np.sum(w * vals.real) / math.pi)
        else:
            total = complex(np.sum(w * vals) / (2.0 * math.pi))
        if previous is not None and abs(total - previous) <= max(tol, rtol * abs(total)):
            return total if complex_result else total.real
        previous = total
        panels *= 2
    raise NonConvergenceError(
        "contour quadrature did not stabilise", estimate=previous,
        info={"T": T, "panels": panels},
    )


# ----------------------------------------------------------------------------
# Root finding
# ----------------------------------------------------------------------------

def find_root_bracketed(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-14):
    """Brent's method (inverse quadratic interpolation with bisection fallback)."""
    flo, fhi = f(lo), f(hi)
    if not (np.isfinite(flo) and np.isfinite(fhi)) or flo * fhi > 0:
        raise DomainError(
            f"invalid bracket [{lo}, {hi}]: f(lo)={flo!r}, f(hi)={fhi!r}", param="bracket"
        )
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    return float(optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500))
