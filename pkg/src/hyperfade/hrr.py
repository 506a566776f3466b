"""Hyper-Rayleigh metrics and regime classification.

All metrics are functions of the effective Gamma shape ``alpha_hat`` of the
link envelope.  A Rayleigh link (exponential SNR) scores exactly
(AoF, G_D, dPO, dC) = (1, 1, 1, 0); a condition is "hyper" when the link is
worse than that benchmark:

* AoF > 1,
* G_D < 1, or G_D = 1 with dPO > 1,
* dC > 0 (capacity loss in nats).
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError
from .numerics import EULER_GAMMA, digamma, find_root_bracketed


class Regime(enum.Enum):
    FULL_HRR = "full-hrr"
    STRONG_HRR = "strong-hrr"
    WEAK_HRR = "weak-hrr"
    NO_HRR = "no-hrr"

    @property
    def severity(self) -> int:
        """Number of hyper-Rayleigh conditions met (3 for full, 0 for none)."""
        return _SEVERITY[self]

    @classmethod
    def from_count(cls, count: int) -> "Regime":
        return _BY_COUNT[count]


_SEVERITY = {Regime.FULL_HRR: 3, Regime.STRONG_HRR: 2, Regime.WEAK_HRR: 1, Regime.NO_HRR: 0}
_BY_COUNT = {v: k for k, v in _SEVERITY.items()}


@dataclass(frozen=True)
class HrrMetrics:
    aof: float
    g_d: float
    delta_po: float
    delta_c: float

    def conditions(self):
        """(aof_hyper, op_hyper, ec_hyper) flags."""
        return (
            self.aof > 1.0,
            self.g_d < 1.0 or (self.g_d == 1.0 and self.delta_po > 1.0),
            self.delta_c > 0.0,
        )

    def regime(self) -> Regime:
        return Regime.from_count(sum(self.conditions()))


def _check(alpha_hat):
    if not (np.isfinite(alpha_hat) and alpha_hat > 0):
        raise DomainError(f"alpha_hat must be > 0, got {alpha_hat!r}", param="alpha_hat")


def aof(alpha_hat: float) -> float:
    """Amount of fading 2 (2a + 3) / (a (a + 1))."""
    _check(alpha_hat)
    a = alpha_hat
    return 2.0 * (2.0 * a + 3.0) / (a * (a + 1.0))


def diversity_gain(alpha_hat: float) -> float:
    _check(alpha_hat)
    return 0.5 * alpha_hat


def power_offset(alpha_hat: float) -> float:
    """(a (a + 1))**(a/2) / G(a + 1), evaluated in log space."""
    _check(alpha_hat)
    a = alpha_hat
    return math.exp(0.5 * a * math.log(a * (a + 1.0)) - special.gammaln(a + 1.0))


def capacity_loss(alpha_hat: float) -> float:
    """-G_e + ln(a (a + 1)) - 2 psi(a), in nats."""
    _check(alpha_hat)
    a = alpha_hat
    return -EULER_GAMMA + math.log(a * (a + 1.0)) - 2.0 * digamma(a)


_ec_lock = threading.Lock()
_ec_root: float | None = None


def ec_boundary_exact() -> float:
    """Root of capacity_loss on [2, 6]; computed once."""
    global _ec_root
    if _ec_root is None:
        with _ec_lock:
            if _ec_root is None:
                _ec_root = find_root_bracketed(capacity_loss, 2.0, 6.0, tol=1e-15)
    return _ec_root


def ec_boundary_taylor() -> float:
    """Second-order Taylor estimate of the capacity boundary."""
    return (1.0 + math.sqrt(1.0 - EULER_GAMMA / 3.0)) / EULER_GAMMA


def aof_boundary() -> float:
    """Positive root of a**2 - 3a - 6 = 0, where AoF = 1."""
    return 0.5 * (3.0 + math.sqrt(33.0))


def metrics(alpha_hat: float) -> HrrMetrics:
    return HrrMetrics(
        aof(alpha_hat), diversity_gain(alpha_hat), power_offset(alpha_hat), capacity_loss(alpha_hat)
    )


def rayleigh_metrics() -> HrrMetrics:
    """Benchmark values for an exponential SNR law.

    With normalised moments M(r) = G(1 + r): AoF = M(2) - 1, the outage
    1 - exp(-x) ~ x gives slope 1 and offset 1, and dC = -G_e - M'(0)
    with M'(0) = psi(1).
    """
    aof_r = math.gamma(3.0) / math.gamma(2.0) ** 2 - 1.0
    return HrrMetrics(aof_r, 1.0, 1.0 / math.gamma(2.0), -EULER_GAMMA - float(special.digamma(1.0)))


def classify(alpha_hat: float) -> Regime:
    """Regime from the boundaries; boundaries belong to the more severe side."""
    _check(alpha_hat)
    if alpha_hat <= 2.0:
        return Regime.FULL_HRR
    if alpha_hat <= ec_boundary_exact():
        return Regime.STRONG_HRR
    if alpha_hat <= aof_boundary():
        return Regime.WEAK_HRR
    return Regime.NO_HRR


def classify_by_count(alpha_hat: float) -> Regime:
    """Regime from counting which hyper conditions hold on metrics()."""
    return metrics(alpha_hat).regime()
