import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import gamma

from volterra_asian.errors import DomainError
from volterra_asian.kernel import (DEFAULT_PARAMS, Kernel, ModelParams, forward_variance_0,
                                   kernel_eval, resolvent_integral, resolvent_kappa)

P = DEFAULT_PARAMS


def test_default_params():
    assert P.to_dict() == dict(kappa=1.15, theta=0.348, sigma=0.39, rho=-0.64, r=0.05, s0=100.0, v0=0.09)


@pytest.mark.parametrize("bad", [dict(kappa=0.0), dict(theta=-1.0), dict(sigma=0.0), dict(rho=1.2),
                                 dict(s0=0.0), dict(v0=-0.01), dict(r=math.inf)])
def test_param_validation(bad):
    with pytest.raises(DomainError):
        P.replace(**bad)


def test_kernel_construction():
    assert Kernel.from_alpha(1.0) == Kernel.classical()
    assert Kernel.from_alpha(0.75) == Kernel.fractional(0.75)
    for a in (0.5, 1.0, 1.2, 0.3):
        with pytest.raises(DomainError):
            Kernel.fractional(a)
    with pytest.raises(DomainError):
        Kernel.from_alpha(1.3)
    with pytest.raises(DomainError):
        Kernel("classical", 0.8)
    with pytest.raises(DomainError):
        Kernel("exotic", 0.8)


def test_kernel_eval():
    assert kernel_eval(Kernel.classical(), 0.37) == 1.0
    assert kernel_eval(Kernel.fractional(1 - 1e-12), 2.0) == pytest.approx(1.0, abs=1e-9)
    assert kernel_eval(Kernel.fractional(0.75), 1.0) == pytest.approx(1 / gamma(0.75), rel=1e-15)
    with pytest.raises(DomainError):
        kernel_eval(Kernel.fractional(0.75), 0.0)


def test_resolvent_values():
    ref = 1.15 * math.exp(-1.15)
    assert resolvent_kappa(Kernel.classical(), P, 1.0) == pytest.approx(ref, rel=1e-15)
    assert resolvent_kappa(Kernel.fractional(1 - 1e-10), P, 1.0) == pytest.approx(ref, abs=1e-8)
    with pytest.raises(DomainError):
        resolvent_kappa(Kernel.classical(), P, 0.0)


def test_fractional_resolvent_solves_its_equation():
    # R + R * (kappa K) = kappa K, checked pointwise by quadrature
    k = Kernel.fractional(0.75)
    a, kap, t = 0.75, P.kappa, 0.5
    R = lambda y: resolvent_kappa(k, P, y)
    # y = t - u^{1/a} absorbs the kernel singularity; R's own one sits at u = t^a
    conv, _ = quad(lambda u: R(t - u ** (1 / a)) * kap / (a * gamma(a)), 0, t**a, limit=200)
    lhs = R(t) + conv
    assert lhs == pytest.approx(kap * t ** (a - 1) / gamma(a), rel=1e-7)


def test_forward_variance_values():
    for k in (Kernel.classical(), Kernel.fractional(0.6)):
        assert forward_variance_0(k, P, 0.0) == pytest.approx(0.09, abs=1e-15)
    ref = P.theta + (P.v0 - P.theta) * math.exp(-P.kappa)
    assert forward_variance_0(Kernel.classical(), P, 1.0) == pytest.approx(ref, rel=1e-14)


def test_fractional_resolvent_integral_matches_quadrature():
    k = Kernel.fractional(0.75)
    # split off [0, 0.1] and handle the singularity by substitution there
    a = 0.75
    head, _ = quad(lambda u: resolvent_kappa(k, P, u ** (1 / a)) * u ** (1 / a - 1) / a, 0, 0.1**a, limit=200)
    tail, _ = quad(lambda y: resolvent_kappa(k, P, y), 0.1, 1.0, limit=200)
    assert resolvent_integral(k, P, 1.0) == pytest.approx(head + tail, abs=1e-9)
    fv = forward_variance_0(k, P, 1.0)
    assert fv == pytest.approx(P.v0 + (P.theta - P.v0) * (head + tail), abs=1e-10)


@pytest.mark.parametrize("k", [Kernel.classical(), Kernel.fractional(0.6), Kernel.fractional(0.9)])
def test_forward_variance_monotone(k):
    tau = np.linspace(0, 12, 241)
    up = forward_variance_0(k, P, tau)
    assert np.all(np.diff(up) >= -1e-14)
    down = forward_variance_0(k, P.replace(v0=0.5), tau)
    assert np.all(np.diff(down) <= 1e-14)
    assert np.all((up >= P.v0 - 1e-15) & (up <= P.theta + 1e-15))


def test_alpha_to_one_continuity():
    tau = np.linspace(0, 12, 121)
    frac = forward_variance_0(Kernel.fractional(0.999), P, tau)
    cls = forward_variance_0(Kernel.classical(), P, tau)
    assert np.max(np.abs(frac - cls)) < 1e-2
    t = tau[1:]
    assert np.max(np.abs(resolvent_kappa(Kernel.fractional(0.999), P, t)
                         - resolvent_kappa(Kernel.classical(), P, t))) < 1e-2


def test_resolvent_total_mass():
    assert resolvent_integral(Kernel.classical(), P, 50.0) == pytest.approx(1.0, abs=1e-15)
    for a in (0.6, 0.75):
        assert resolvent_integral(Kernel.fractional(a), P, 1e6) == pytest.approx(1.0, abs=1e-3)


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.51, 0.99), tau=st.floats(0.0, 30.0), v0=st.floats(0.0, 1.0))
def test_forward_variance_between_v0_and_theta(alpha, tau, v0):
    p = P.replace(v0=v0)
    fv = forward_variance_0(Kernel.fractional(alpha), p, tau)
    assert min(v0, p.theta) - 1e-12 <= fv <= max(v0, p.theta) + 1e-12
