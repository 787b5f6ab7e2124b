"""Model parameters, convolution kernels, resolvents and the initial forward variance."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy.special import gamma

from .errors import DomainError
from .numerics import MLParams, mittag_leffler

__all__ = [
    "ModelParams",
    "Kernel",
    "kernel_eval",
    "resolvent_kappa",
    "resolvent_integral",
    "forward_variance_0",
    "DEFAULT_PARAMS",
]


@dataclass(frozen=True)
class ModelParams:
    """Heston-type parameters shared by all modules.

    Defaults are the benchmark set used for the published price tables.
    """

    kappa: float = 1.15
    theta: float = 0.348
    sigma: float = 0.39
    rho: float = -0.64
    r: float = 0.05
    s0: float = 100.0
    v0: float = 0.09

    def __post_init__(self):
        for name in ("kappa", "theta", "sigma"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if not -1.0 <= self.rho <= 1.0:
            raise DomainError(f"rho must lie in [-1, 1], got {self.rho}")
        if not self.s0 > 0:
            raise DomainError(f"s0 must be positive, got {self.s0}")
        if not self.v0 >= 0:
            raise DomainError(f"v0 must be nonnegative, got {self.v0}")
        if not math.isfinite(self.r):
            raise DomainError("r must be finite")

    def replace(self, **changes) -> "ModelParams":
        return ModelParams(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_PARAMS = ModelParams()


@dataclass(frozen=True)
class Kernel:
    """Convolution kernel of the variance equation.

    ``Kernel.classical()`` is ``K(t) = 1``; ``Kernel.fractional(alpha)`` is
    ``K(t) = t**(alpha - 1) / Gamma(alpha)`` with ``1/2 < alpha < 1``.
    """

    kind: str = "classical"
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind == "classical":
            if self.alpha != 1.0:
                raise DomainError("the classical kernel has no free parameter (alpha = 1)")
        elif self.kind == "fractional":
            if not 0.5 < self.alpha < 1.0:
                raise DomainError(f"fractional kernel needs 0.5 < alpha < 1, got {self.alpha}")
        else:
            raise DomainError(f"unknown kernel kind {self.kind!r}")

    @classmethod
    def classical(cls) -> "Kernel":
        return cls("classical", 1.0)

    @classmethod
    def fractional(cls, alpha: float) -> "Kernel":
        return cls("fractional", float(alpha))

    @classmethod
    def from_alpha(cls, alpha: float) -> "Kernel":
        """Classical kernel for ``alpha == 1``, fractional otherwise."""
        alpha = float(alpha)
        if alpha == 1.0:
            return cls.classical()
        if not 0.5 < alpha < 1.0:
            raise DomainError(f"alpha must lie in (0.5, 1], got {alpha}")
        return cls.fractional(alpha)

    @property
    def is_classical(self) -> bool:
        return self.kind == "classical"


def kernel_eval(k: Kernel, t):
    """``K(t)``; the fractional kernel is singular at 0 and requires ``t > 0``."""
    t_arr = np.asarray(t, dtype=float)
    if k.is_classical:
        out = np.ones_like(t_arr)
    else:
        if np.any(t_arr <= 0):
            raise DomainError("fractional kernel is only defined for t > 0")
        out = t_arr ** (k.alpha - 1.0) / gamma(k.alpha)
    return float(out) if out.ndim == 0 else out


def resolvent_kappa(k: Kernel, params: ModelParams, t):
    """Resolvent ``R`` of ``kappa * K``, i.e. ``R * (kappa K) = kappa K - R``.

    Classical: ``kappa exp(-kappa t)``.
    Fractional: ``kappa t**(alpha-1) E_{alpha,alpha}(-kappa t**alpha)``.
    """
    kappa = params.kappa
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise DomainError("resolvent is evaluated at t > 0 only")
    if k.is_classical:
        out = kappa * np.exp(-kappa * t_arr)
    else:
        a = k.alpha
        ml = MLParams(a, a)
        out = np.array(
            [kappa * ti ** (a - 1.0) * mittag_leffler(ml, -kappa * ti**a) for ti in t_arr.ravel()]
        ).reshape(t_arr.shape)
    return float(out) if out.ndim == 0 else out


def resolvent_integral(k: Kernel, params: ModelParams, tau):
    """``int_0^tau R(y) dy``, a number in [0, 1].

    Uses ``1 - exp(-kappa tau)`` or ``1 - E_{alpha,1}(-kappa tau**alpha)``, which
    avoids quadrature of the singular fractional resolvent.
    """
    kappa = params.kappa
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0):
        raise DomainError("tau must be nonnegative")
    if k.is_classical:
        out = -np.expm1(-kappa * tau_arr)
    else:
        ml = MLParams(k.alpha, 1.0)
        out = np.array(
            [1.0 - mittag_leffler(ml, -kappa * ti**k.alpha) for ti in tau_arr.ravel()]
        ).reshape(tau_arr.shape)
    return float(out) if out.ndim == 0 else out


def forward_variance_0(k: Kernel, params: ModelParams, tau):
    """Time-0 forward variance ``xi_0(tau) = E[nu_tau]``.

    ``xi_0(tau) = v0 (1 - I(tau)) + theta I(tau)`` with ``I`` the integrated
    resolvent, so it interpolates between ``v0`` and ``theta``.
    """
    frac = resolvent_integral(k, params, tau)
    return params.v0 + (params.theta - params.v0) * frac
