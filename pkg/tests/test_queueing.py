import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bwshare.errors import DomainError
from bwshare.queueing import QueueParams, g_pool, p_succ


def reference(mu, rho, D):
    with mpmath.workdps(50):
        mu, rho, D = mpmath.mpf(mu), mpmath.mpf(rho), mpmath.mpf(D)
        if rho == 1:
            return float(mu * D / (1 + mu * D))
        e = mpmath.e ** (mu * D * (rho - 1))
        return float((1 - e) / (1 - rho * e))


def test_rho_zero():
    assert abs(p_succ(QueueParams(1, 0, 1)) - (1 - math.exp(-1))) < 1e-12


def test_rho_half_against_high_precision():
    assert p_succ(QueueParams(1, 0.5, 1)) == pytest.approx(reference(1, 0.5, 1), abs=1e-14)
    assert p_succ(QueueParams(1, 0.5, 1)) == pytest.approx(0.5648, abs=1e-3)


@pytest.mark.parametrize("mu,D", [(1, 1), (2, 0.3), (0.5, 7)])
def test_continuous_at_rho_one(mu, D):
    lim = mu * D / (1 + mu * D)
    assert p_succ(QueueParams(mu, 1.0, D)) == pytest.approx(lim, abs=1e-15)
    for eps in (1e-8, -1e-8, 1e-6, -1e-6):
        assert abs(p_succ(QueueParams(mu, 1 + eps, D)) - lim) < 1e-6


@settings(max_examples=300, deadline=None)
@given(
    mu=st.floats(0.01, 20),
    rho=st.floats(0, 5),
    D=st.floats(0.01, 20),
)
def test_matches_high_precision(mu, rho, D):
    assert p_succ(QueueParams(mu, rho, D)) == pytest.approx(reference(mu, rho, D), rel=1e-9, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(mu=st.floats(0.05, 10), rho=st.floats(0, 3), D=st.floats(0.05, 10), k=st.floats(1.0, 2.0))
def test_monotone_in_rho_and_deadline(mu, rho, D, k):
    p = p_succ(QueueParams(mu, rho, D))
    assert 0 <= p <= 1
    assert p_succ(QueueParams(mu, rho * k, D)) <= p + 1e-12
    assert p_succ(QueueParams(mu, rho, D * k)) >= p - 1e-12


def test_extreme_exponent_saturates():
    assert p_succ(QueueParams(1e6, 0.5, 1e6)) == 1.0
    assert p_succ(QueueParams(1e6, 3.0, 1e6)) == pytest.approx(1 / 3)


def test_g_pool_rho_zero():
    expected = (1 - math.exp(-2)) / (1 - math.exp(-1)) - 1
    assert g_pool(QueueParams(1, 0, 1)) == pytest.approx(expected, rel=1e-12)
    assert g_pool(QueueParams(1, 0, 1)) == pytest.approx(0.3678, abs=1e-4)


def test_g_pool_vanishes_for_long_deadlines():
    assert g_pool(QueueParams(1, 0.5, 200)) < 1e-12


def test_g_pool_decreasing_in_deadline():
    D = np.arange(0.1, 10.0001, 0.1)
    g = [g_pool(QueueParams(1, 0.9, d)) for d in D]
    assert all(a > b for a, b in zip(g, g[1:]))


@settings(max_examples=200, deadline=None)
@given(mu=st.floats(0.05, 10), rho=st.floats(0, 3), D=st.floats(0.05, 10))
def test_pooling_never_hurts(mu, rho, D):
    assert g_pool(QueueParams(mu, rho, D)) >= -1e-12


@pytest.mark.parametrize("args", [(0, 0.5, 1), (1, -0.1, 1), (1, 0.5, 0), (math.nan, 0.5, 1), (1, math.inf, 1)])
def test_domain_errors(args):
    with pytest.raises(DomainError):
        QueueParams(*args)
