"""Characteristic functions built from the Riccati-Volterra solution.

``psi_t(s, w) = E[exp(s log G_{t,T} + w log S_T) | F_t]`` with
``G_{t,T} = exp((1/T) int_t^T log S_u du)``.

At ``t = 0`` the resolvent can be eliminated from the exponent (see
:func:`psi0`), so the rough case never touches the Mittag-Leffler function.
For ``t > 0`` the forward variance curve ``xi_t`` is path dependent and is
supplied by the caller (:func:`psi_t`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .kernel import Kernel, ModelParams, forward_variance_0
from .riccati import DEFAULT_STEPS, TransformArg, q_form, solve_phi2_batch

__all__ = [
    "ForwardCurve",
    "StatePath",
    "psi0",
    "psi0_batch",
    "psi_t",
    "psi_t_batch",
    "european_cf",
    "european_cf_batch",
]


@dataclass(frozen=True)
class ForwardCurve:
    """Samples of ``u -> xi_t(u)`` on ``[t, T]``, linearly interpolated."""

    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    t: float = 0.0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or len(times) < 2:
            raise DomainError("curve needs matching 1-d times/values with at least two samples")
        if np.any(np.diff(times) <= 0):
            raise DomainError("curve times must be strictly increasing")
        if np.any(values < 0):
            raise DomainError("forward variances must be nonnegative")
        if times[0] < self.t - 1e-12:
            raise DomainError("curve starts before the valuation time")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def initial(cls, kernel: Kernel, params: ModelParams, T: float, n: int = 1025):
        """``xi_0`` sampled on a uniform grid of ``[0, T]``."""
        times = np.linspace(0.0, T, n)
        return cls(times, forward_variance_0(kernel, params, times), 0.0)

    def covers(self, t: float, T: float) -> bool:
        tol = 1e-12 * max(1.0, T)
        return self.times[0] <= t + tol and self.times[-1] >= T - tol

    def __call__(self, u):
        return np.interp(u, self.times, self.values)


@dataclass(frozen=True)
class StatePath:
    """What pricing at time ``t`` needs to know about the realized path.

    ``running_log_integral`` is ``int_0^t log S_u du``.
    """

    t: float
    log_spot: float
    running_log_integral: float = 0.0

    def __post_init__(self):
        if not self.t >= 0:
            raise DomainError("valuation time must be nonnegative")
        if self.t == 0 and self.running_log_integral != 0:
            raise DomainError("the running log integral vanishes at t = 0")

    @classmethod
    def initial(cls, params: ModelParams) -> "StatePath":
        return cls(0.0, math.log(params.s0), 0.0)


def _trapezoid(y, h):
    return h * (y.sum(axis=0) - 0.5 * (y[0] + y[-1]))


def psi0_batch(s, w, T, kernel: Kernel, params: ModelParams, n_steps: int = DEFAULT_STEPS,
               scheme: str = "implicit"):
    """Vectorized ``psi_0(s, w)``.

    exp( s (log S0 + rT/2) + w (log S0 + rT)
         + int_0^T [v0 Q(tau) + kappa (theta - v0) phi2(tau)] dtau )

    with the time integral taken by the trapezoid rule on the Riccati grid.
    """
    s, w = np.broadcast_arrays(np.atleast_1d(np.asarray(s, complex)),
                               np.atleast_1d(np.asarray(w, complex)))
    grid, phi2 = solve_phi2_batch(s, w, T, kernel, params, n_steps, scheme=scheme)
    f1 = grid[:, None] * (s / T)[None, :] + w[None, :]
    q = q_form(params, f1, phi2)
    integrand = params.v0 * q + params.kappa * (params.theta - params.v0) * phi2
    log_s0 = math.log(params.s0)
    r = params.r
    exponent = s * (log_s0 + 0.5 * r * T) + w * (log_s0 + r * T) + _trapezoid(integrand, grid[1])
    return np.exp(exponent)


def psi0(arg: TransformArg, kernel: Kernel, params: ModelParams,
         n_steps: int = DEFAULT_STEPS, scheme: str = "implicit") -> complex:
    return complex(psi0_batch(arg.s, arg.w, arg.T, kernel, params, n_steps, scheme)[0])


def psi_t_batch(s, w, T, state: StatePath, curve: ForwardCurve, kernel: Kernel,
                params: ModelParams, n_steps: int = DEFAULT_STEPS, scheme: str = "implicit"):
    """Vectorized forward-variance form of ``psi_t(s, w)``.

    exp( s ((T-t)/T log S_t + r (T-t)^2 / (2T)) + w (log S_t + r (T-t))
         + int_t^T Q(T-u) xi_t(u) du )

    The Riccati equation is solved on ``[0, T - t]`` and the integral is
    computed in the variable ``tau = T - u``.
    """
    t = state.t
    if not 0 <= t < T:
        raise DomainError(f"valuation time {t} must lie in [0, T)")
    if not curve.covers(t, T):
        raise DomainError(f"forward curve [{curve.times[0]}, {curve.times[-1]}] "
                          f"does not cover [{t}, {T}]")
    s, w = np.broadcast_arrays(np.atleast_1d(np.asarray(s, complex)),
                               np.atleast_1d(np.asarray(w, complex)))
    tau_end = T - t
    grid, phi2 = solve_phi2_batch(s, w, T, kernel, params, n_steps, horizon=tau_end,
                                  scheme=scheme)
    f1 = grid[:, None] * (s / T)[None, :] + w[None, :]
    q = q_form(params, f1, phi2)
    xi = curve(T - grid)
    r = params.r
    x = state.log_spot
    exponent = (s * ((T - t) / T * x + r * (T - t) ** 2 / (2 * T))
                + w * (x + r * (T - t))
                + _trapezoid(q * xi[:, None], grid[1]))
    return np.exp(exponent)


def psi_t(arg: TransformArg, state: StatePath, curve: ForwardCurve, kernel: Kernel,
          params: ModelParams, n_steps: int = DEFAULT_STEPS, scheme: str = "implicit") -> complex:
    return complex(psi_t_batch(arg.s, arg.w, arg.T, state, curve, kernel, params,
                               n_steps, scheme)[0])


def european_cf_batch(u, kernel: Kernel, params: ModelParams, T: float,
                      n_steps: int = DEFAULT_STEPS, scheme: str = "implicit"):
    """Characteristic function of ``log S_T`` at real ``u``: ``psi_0(0, i u)``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return psi0_batch(np.zeros_like(u), 1j * u, T, kernel, params, n_steps, scheme)


def european_cf(u: float, kernel: Kernel, params: ModelParams, T: float,
                n_steps: int = DEFAULT_STEPS, scheme: str = "implicit") -> complex:
    return complex(european_cf_batch(u, kernel, params, T, n_steps, scheme)[0])
