import math
import threading

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperfade import hrr, irs_link
from hyperfade.errors import DomainError
from hyperfade.hrr import Regime

G_E = float(mpmath.euler)


def _snr_log_moments(a, gbar=1.0):
    """E{gamma}, E{gamma**2}, E{ln gamma} of the Gamma-approximation SNR law by quadrature."""
    ga = irs_link.approx_from_alpha_hat(a)
    lb = math.log(gbar)

    def weight(lg, k):
        g = math.exp(float(lg))
        return g * irs_link.snr_pdf_approx(ga, gbar, g) * k(lg, g)

    pts = [lb - 700, lb - 100, lb - 10, lb, lb + 4, lb + 14]
    m1 = mpmath.quad(lambda lg: weight(lg, lambda l, g: g), pts)
    m2 = mpmath.quad(lambda lg: weight(lg, lambda l, g: g * g), pts)
    ml = mpmath.quad(lambda lg: weight(lg, lambda l, g: l), pts)
    return float(m1), float(m2), float(ml)


@pytest.mark.parametrize("a", [0.7, 2.0, 3.3, 4.5, 9.0])
def test_aof_against_snr_moments(a):
    m1, m2, _ = _snr_log_moments(a)
    assert hrr.aof(a) == pytest.approx(m2 / m1**2 - 1.0, rel=1e-8)


def test_aof_examples():
    assert hrr.aof(2.0) == pytest.approx(7.0 / 3.0, rel=1e-15)
    assert hrr.aof(hrr.aof_boundary()) == pytest.approx(1.0, abs=1e-12)
    assert hrr.aof(1e8) < 1e-7
    b = hrr.aof_boundary()
    assert b * b - 3 * b - 6 == pytest.approx(0.0, abs=1e-12)
    assert b == pytest.approx(4.3723, abs=5e-5)


@pytest.mark.parametrize("a", [0.7, 2.0, 3.3, 9.0])
def test_capacity_loss_against_log_moment(a):
    # Rayleigh: E ln gamma = ln gbar - G_e; the loss is the gap in E ln gamma
    _, _, ml = _snr_log_moments(a, gbar=5.0)
    assert hrr.capacity_loss(a) == pytest.approx((math.log(5.0) - G_E) - ml, rel=1e-8, abs=1e-10)


def test_capacity_loss_examples():
    assert hrr.capacity_loss(1.0) == pytest.approx(G_E + math.log(2.0), rel=1e-14)
    assert hrr.capacity_loss(2.0) > 0
    assert hrr.capacity_loss(4.0) < 0


@pytest.mark.parametrize("a", [0.6, 1.0, 2.0, 4.0])
def test_power_offset_is_outage_coefficient(a):
    ga = irs_link.approx_from_alpha_hat(a)
    gbar = 1e12
    coef = irs_link.outage_exact_approx(ga, gbar, 1.0) * gbar ** (a / 2)
    assert hrr.power_offset(a) == pytest.approx(coef, rel=1e-4)


def test_power_offset_examples():
    assert hrr.power_offset(2.0) == pytest.approx(3.0, rel=1e-14)
    assert hrr.power_offset(1.0) == pytest.approx(math.sqrt(2.0), rel=1e-14)


@pytest.mark.parametrize("a", [0.6, 2.0, 6.0])
def test_diversity_gain_is_outage_slope(a):
    ga = irs_link.approx_from_alpha_hat(a)
    g1, g2 = 10.0**6, 10.0**8
    p1, p2 = irs_link.outage_exact_approx(ga, g1, 1.0), irs_link.outage_exact_approx(ga, g2, 1.0)
    slope = -(math.log(p2) - math.log(p1)) / (math.log(g2) - math.log(g1))
    assert hrr.diversity_gain(a) == pytest.approx(slope, rel=0.02)
    assert hrr.diversity_gain(4.0) == 2.0


def test_ec_boundary():
    root = hrr.ec_boundary_exact()
    assert 3.30 < root < 3.36
    assert hrr.capacity_loss(root) == pytest.approx(0.0, abs=1e-10)
    assert hrr.ec_boundary_taylor() == pytest.approx(3.289, abs=0.01)
    assert abs(hrr.ec_boundary_taylor() - root) / root < 0.02


def test_ec_boundary_thread_safe():
    results = []
    threads = [threading.Thread(target=lambda: results.append(hrr.ec_boundary_exact())) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(results)) == 1


def test_rayleigh_benchmark():
    m = hrr.rayleigh_metrics()
    assert m.aof == pytest.approx(1.0, abs=1e-10)
    assert m.g_d == pytest.approx(1.0, abs=1e-10)
    assert m.delta_po == pytest.approx(1.0, abs=1e-10)
    assert m.delta_c == pytest.approx(0.0, abs=1e-10)
    assert m.regime() is Regime.NO_HRR


def test_metrics_examples():
    m = hrr.metrics(2.0)
    assert (m.aof, m.g_d, m.delta_po) == pytest.approx((7 / 3, 1.0, 3.0))
    assert m.delta_c > 0
    assert m.conditions() == (True, True, True)
    assert hrr.metrics(10.0).conditions() == (False, False, False)


@pytest.mark.parametrize(
    "a,regime",
    [(1.5, Regime.FULL_HRR), (2.0, Regime.FULL_HRR), (2.0000001, Regime.STRONG_HRR), (3.0, Regime.STRONG_HRR),
     (3.4, Regime.WEAK_HRR), (4.37, Regime.WEAK_HRR), (4.38, Regime.NO_HRR), (5.0, Regime.NO_HRR)],
)
def test_classify_examples(a, regime):
    assert hrr.classify(a) is regime


def test_classify_matches_condition_count():
    for a in np.logspace(math.log10(0.5), math.log10(20.0), 1000):
        assert hrr.classify(a) is hrr.classify_by_count(a), a


def test_monotonicity():
    a = np.logspace(math.log10(0.5), math.log10(20.0), 400)
    aof = np.array([hrr.aof(x) for x in a])
    dc = np.array([hrr.capacity_loss(x) for x in a])
    gd = np.array([hrr.diversity_gain(x) for x in a])
    sev = np.array([hrr.classify(x).severity for x in a])
    assert np.all(np.diff(aof) < 0)
    assert np.all(np.diff(dc) < 0)
    assert np.all(np.diff(gd) > 0)
    assert np.all(np.diff(sev) <= 0)


@given(st.floats(min_value=0.5, max_value=20.0))
@settings(max_examples=300, deadline=None)
def test_conditions_nested(a):
    # OP-hyper implies EC-hyper implies AoF-hyper: the AoF set is the widest
    aof_h, op_h, ec_h = hrr.metrics(a).conditions()
    assert (not op_h) or ec_h
    assert (not ec_h) or aof_h


def test_regime_helpers():
    assert Regime.from_count(3) is Regime.FULL_HRR
    assert [r.severity for r in Regime] == [3, 2, 1, 0]
    assert Regime.FULL_HRR.value == "full-hrr"


@pytest.mark.parametrize("f", [hrr.aof, hrr.diversity_gain, hrr.power_offset, hrr.capacity_loss, hrr.classify])
def test_domain(f):
    with pytest.raises(DomainError):
        f(0.0)
    with pytest.raises(DomainError):
        f(math.nan)
