"""Minimum number of IRS elements for a target hyper-Rayleigh regime.

Since alpha_hat grows linearly with the element count, alpha_hat(N) = N / (kappa - 1),
the smallest N that strictly exceeds a regime boundary b is
floor(b (kappa - 1)) + 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy import special

from . import cascade, hrr
from .cascade import CascadePair
from .errors import DomainError
from .ipl import FULL_HRR_ALPHA_LIMIT, make_ipl

# relative nudge applied before flooring; rounds toward the larger count
_NUDGE = 1e-9


class Target(enum.Enum):
    EXIT_FULL = "exit-full"
    REACH_NO = "reach-no"

    @property
    def threshold(self) -> float:
        return 2.0 if self is Target.EXIT_FULL else hrr.aof_boundary()


@dataclass(frozen=True)
class SolveResult:
    n_exit_full: int
    n_reach_no: int
    kappa_minus_1: float

    @property
    def alpha_hat_exit_full(self) -> float:
        return self.n_exit_full / self.kappa_minus_1

    @property
    def alpha_hat_reach_no(self) -> float:
        return self.n_reach_no / self.kappa_minus_1

    def as_dict(self):
        return {
            "n_exit_full": self.n_exit_full,
            "n_reach_no": self.n_reach_no,
            "kappa_minus_1": self.kappa_minus_1,
            "alpha_hat_exit_full": self.alpha_hat_exit_full,
            "alpha_hat_reach_no": self.alpha_hat_reach_no,
        }


def _check_alpha0(alpha0):
    if not (0.0 < alpha0 < FULL_HRR_ALPHA_LIMIT):
        raise DomainError(
            f"alpha0 must lie in (0, {FULL_HRR_ALPHA_LIMIT}), got {alpha0!r}", param="alpha0"
        )


def equal_channel_params(alpha0: float, omega: float = 1.0) -> CascadePair:
    """Identical links with beta = 1 / (2 alpha0)."""
    _check_alpha0(alpha0)
    link = make_ipl(alpha0, 1.0 / (2.0 * alpha0), omega)
    return CascadePair(link, link)


def kappa_equal_closed_form(alpha0: float) -> float:
    """Squared Gamma-ratio G(1-2a)G(a)G(3a) / (G(1-a)**2 G(2a)**2) for equal links."""
    _check_alpha0(alpha0)
    a = alpha0
    log_bracket = (
        special.gammaln(1.0 - 2.0 * a) + special.gammaln(a) + special.gammaln(3.0 * a)
        - 2.0 * special.gammaln(1.0 - a) - 2.0 * special.gammaln(2.0 * a)
    )
    return math.exp(2.0 * log_bracket)


def min_elements_from_kappa(kappa_minus_1: float, target: Target) -> int:
    if not kappa_minus_1 > 0:
        raise DomainError("kappa - 1 must be > 0", param="kappa_minus_1")
    x = target.threshold * kappa_minus_1
    return int(math.floor(x * (1.0 + _NUDGE))) + 1


def min_elements(pair: CascadePair, target: Target) -> int:
    return min_elements_from_kappa(cascade.kappa_minus_1(pair), target)


def solve_pair(pair: CascadePair) -> SolveResult:
    km1 = cascade.kappa_minus_1(pair)
    return SolveResult(
        min_elements_from_kappa(km1, Target.EXIT_FULL),
        min_elements_from_kappa(km1, Target.REACH_NO),
        km1,
    )


def theorem5(alpha0: float) -> SolveResult:
    """Equal-channel minimum element counts from the closed-form kappa."""
    equal_channel_params(alpha0)
    km1 = kappa_equal_closed_form(alpha0) - 1.0
    return SolveResult(
        min_elements_from_kappa(km1, Target.EXIT_FULL),
        min_elements_from_kappa(km1, Target.REACH_NO),
        km1,
    )
