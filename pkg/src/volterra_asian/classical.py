"""Independent classical-Heston representation of the joint transform.

For ``K = 1`` the transform can also be written through an ordinary Riccati
ODE.  In forward time ``C(0) = rho w / sigma`` and

    C'(tau) = z1 tau^2 + z2 tau + z3 - kappa C + sigma^2 C^2 / 2,
    D'(tau) = kappa theta C,

so that ``psi_0 = exp(z0 + v0 C(T) + D(T))``.  This shares no code with the
Volterra solver and serves as its oracle.  Integration is classical RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, DomainError
from .kernel import Kernel, ModelParams
from .riccati import TransformArg, _check_domain, solve_phi2_batch

__all__ = [
    "ClassicalCoefficients",
    "classical_coefficients",
    "classical_psi0",
    "classical_psi0_batch",
    "classical_path",
    "substitution_check",
]

DEFAULT_ODE_STEPS = 4096


@dataclass(frozen=True)
class ClassicalCoefficients:
    z0: complex
    z1: complex
    z2: complex
    z3: complex
    z4: complex


def _coefficients(s, w, params: ModelParams, T):
    k, th, sig, rho = params.kappa, params.theta, params.sigma, params.rho
    if not sig > 0:
        raise DomainError("classical coefficients need sigma > 0")
    x0 = math.log(params.s0)
    r = params.r
    z0 = (s * (x0 + r * T / 2 - k * th * rho * T / (2 * sig) - rho / sig * params.v0)
          + w * (x0 + r * T - k * th * rho * T / sig - rho / sig * params.v0))
    z1 = s * s * (1 - rho**2) / (2 * T**2)
    z2 = s * (2 * rho * k - sig) / (2 * sig * T) + s * w * (1 - rho**2) / T
    z3 = s * rho / (sig * T) + w * (2 * rho * k - sig) / (2 * sig) + w * w * (1 - rho**2) / 2
    z4 = rho * w / sig
    return z0, z1, z2, z3, z4


def classical_coefficients(arg: TransformArg, params: ModelParams) -> ClassicalCoefficients:
    return ClassicalCoefficients(*(complex(z) for z in _coefficients(arg.s, arg.w, params, arg.T)))


def _rk4(s, w, params: ModelParams, T, ode_steps, horizon=None):
    """Integrate (C, D) on a uniform grid; returns ``(grid, C, D)`` time-major."""
    z0, z1, z2, z3, z4 = _coefficients(s, w, params, T)
    k, half_sig2, kth = params.kappa, 0.5 * params.sigma**2, params.kappa * params.theta
    H = T if horizon is None else horizon
    h = H / ode_steps

    def rhs(tau, c):
        return z1 * tau * tau + z2 * tau + z3 - k * c + half_sig2 * c * c

    C = np.empty((ode_steps + 1, len(s)), dtype=complex)
    D = np.empty_like(C)
    C[0] = z4
    D[0] = 0.0
    c, d = C[0].copy(), D[0].copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(ode_steps):
            tau = n * h
            k1 = rhs(tau, c)
            k2 = rhs(tau + h / 2, c + h / 2 * k1)
            k3 = rhs(tau + h / 2, c + h / 2 * k2)
            k4 = rhs(tau + h, c + h * k3)
            # D' = kappa theta C, so D uses the same stage values of C
            d = d + h / 6 * kth * (c + 2 * (c + h / 2 * k1) + 2 * (c + h / 2 * k2) + (c + h * k3))
            c = c + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(c)):
                raise DivergenceError(f"classical Riccati ODE blew up at step {n + 1}", node=n + 1)
            C[n + 1], D[n + 1] = c, d
    return np.linspace(0.0, H, ode_steps + 1), C, D, z0


def classical_psi0_batch(s, w, params: ModelParams, T: float,
                         ode_steps: int = DEFAULT_ODE_STEPS):
    s, w = np.broadcast_arrays(np.atleast_1d(np.asarray(s, complex)),
                               np.atleast_1d(np.asarray(w, complex)))
    _check_domain(s, w)
    _, C, D, z0 = _rk4(s, w, params, T, ode_steps)
    return np.exp(z0 + params.v0 * C[-1] + D[-1])


def classical_psi0(arg: TransformArg, params: ModelParams, T: float | None = None,
                   ode_steps: int = DEFAULT_ODE_STEPS) -> complex:
    """Classical-Heston ``psi_0(s, w)`` by RK4 on the time-inverted Riccati ODE."""
    T = arg.T if T is None else T
    return complex(classical_psi0_batch(arg.s, arg.w, params, T, ode_steps)[0])


def classical_path(arg: TransformArg, params: ModelParams, ode_steps: int = DEFAULT_ODE_STEPS):
    """``(grid, C)`` for one argument."""
    grid, C, _, _ = _rk4(np.array([arg.s]), np.array([arg.w]), params, arg.T, ode_steps)
    return grid, C[:, 0]


def substitution_check(arg: TransformArg, params: ModelParams, n_steps: int,
                       ode_refine: int = 4) -> float:
    """Max over the Volterra grid of ``|phi2 - (C - (rho/sigma) phi1)|``.

    ``phi2`` comes from the classical-kernel Volterra solver with ``n_steps``;
    ``C`` from RK4 on a grid ``ode_refine`` times finer, sampled at the same nodes.
    """
    grid, phi2 = solve_phi2_batch(arg.s, arg.w, arg.T, Kernel.classical(), params, n_steps)
    _, C = classical_path(arg, params, n_steps * ode_refine)
    C = C[::ode_refine]
    f1 = arg.s * grid / arg.T + arg.w
    return float(np.max(np.abs(phi2[:, 0] - (C - params.rho / params.sigma * f1))))
