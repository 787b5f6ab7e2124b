"""Monte Carlo oracle for the Volterra-Heston model.

Variance by explicit Euler product integration with exact kernel weights

    nu_n = nu0 + sum_{j<n} w_{n-j} X_j,   X_j = kappa (theta - nu_j+) + sigma sqrt(nu_j+) dB_j / h,
    w_m = int_{(m-1)h}^{mh} K(u) du,

full truncation ``nu+ = max(nu, 0)``, and log-spot by Euler with increments
correlated at ``rho``.  Only meant for loose (standard-error level) checks.

Paths are generated in fixed-size blocks, each with its own Philox stream
spawned from the seed, so results do not depend on how blocks are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gamma

from .errors import DomainError
from .kernel import Kernel, ModelParams

__all__ = ["SimSpec", "PathEnsemble", "MCEstimate", "simulate_paths", "mc_price",
           "mc_prices", "mc_transform", "kernel_weights"]

BLOCK = 2048
_CHUNK = 32


@dataclass(frozen=True)
class SimSpec:
    n_paths: int = 100_000
    n_time: int = 512
    seed: int = 20240601
    antithetic: bool = True

    def __post_init__(self):
        if self.n_paths < 2:
            raise DomainError("n_paths must be at least 2")
        if self.n_time < 8:
            raise DomainError("n_time must be at least 8")
        if self.antithetic and self.n_paths % 2:
            raise DomainError("antithetic sampling needs an even n_paths")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


class PathEnsemble(NamedTuple):
    grid: np.ndarray
    log_s: np.ndarray  # (n_paths, n_time + 1)
    nu: np.ndarray  # (n_paths, n_time + 1), before truncation


class MCEstimate(NamedTuple):
    estimate: float
    std_error: float


def kernel_weights(kernel: Kernel, h: float, n: int) -> np.ndarray:
    """``w[m] = int_{(m-1)h}^{mh} K(u) du`` for ``m = 1..n``; ``w[0]`` is unused."""
    m = np.arange(n + 1, dtype=float)
    w = np.zeros(n + 1)
    a = kernel.alpha
    w[1:] = h**a * (m[1:] ** a - m[:-1] ** a) / gamma(a + 1)
    return w


def _block_sizes(spec: SimSpec):
    full, rest = divmod(spec.n_paths, BLOCK)
    return [BLOCK] * full + ([rest] if rest else [])


def _simulate_block(kernel: Kernel, params: ModelParams, T: float, n_time: int,
                    n_paths: int, antithetic: bool, seed_seq: np.random.SeedSequence):
    rng = np.random.Generator(np.random.Philox(seed_seq))
    h = T / n_time
    sq_h = math.sqrt(h)
    k, th, sig, rho = params.kappa, params.theta, params.sigma, params.rho
    base = n_paths // 2 if antithetic else n_paths
    z = rng.standard_normal((2, n_time, base))
    if antithetic:
        z = np.concatenate([z, -z], axis=2)
    dB = z[0] * sq_h
    dW = rho * dB + math.sqrt(1.0 - rho * rho) * z[1] * sq_h

    nu = np.empty((n_time + 1, n_paths))
    log_s = np.empty((n_time + 1, n_paths))
    nu[0] = params.v0
    log_s[0] = math.log(params.s0)
    X = np.empty((n_time, n_paths))
    if kernel.is_classical:
        acc = np.zeros(n_paths)
    else:
        w = kernel_weights(kernel, h, n_time)
        far = None
    for n in range(n_time):
        vp = np.maximum(nu[n], 0.0)
        root = np.sqrt(vp)
        X[n] = k * (th - vp) + sig * root * dB[n] / h
        log_s[n + 1] = log_s[n] + (params.r - 0.5 * vp) * h + root * dW[n]
        if kernel.is_classical:
            acc += h * X[n]
            nu[n + 1] = params.v0 + acc
            continue
        # history before the current chunk enters through one matrix product
        c0 = n - n % _CHUNK
        if n == c0:
            rows = np.arange(c0 + 1, min(c0 + _CHUNK, n_time) + 1)
            far = w[rows[:, None] - np.arange(c0)[None, :]] @ X[:c0] if c0 else None
        near = w[n + 1 - c0 : 0 : -1] @ X[c0 : n + 1]
        nu[n + 1] = params.v0 + near + (far[n - c0] if c0 else 0.0)
    return log_s.T, nu.T


def _blocks(kernel, params, T, spec: SimSpec, workers: int = 1):
    sizes = _block_sizes(spec)
    seqs = np.random.SeedSequence(spec.seed).spawn(len(sizes))
    jobs = [(kernel, params, T, spec.n_time, m, spec.antithetic, sq) for m, sq in zip(sizes, seqs)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            yield from ex.map(lambda a: _simulate_block(*a), jobs)
    else:
        for a in jobs:
            yield _simulate_block(*a)


def simulate_paths(kernel: Kernel, params: ModelParams, T: float, spec: SimSpec) -> PathEnsemble:
    """Full path ensemble; memory is ``16 * n_paths * (n_time + 1)`` bytes."""
    if not T > 0:
        raise DomainError("T must be positive")
    parts = list(_blocks(kernel, params, T, spec))
    log_s = np.concatenate([p[0] for p in parts])
    nu = np.concatenate([p[1] for p in parts])
    return PathEnsemble(np.linspace(0.0, T, spec.n_time + 1), log_s, nu)


def _log_geo_mean(log_s, n_time):
    return (log_s.sum(axis=1) - 0.5 * (log_s[:, 0] + log_s[:, -1])) / n_time


def _payoffs(option: str, strike, log_s, n_time):
    g = np.exp(_log_geo_mean(log_s, n_time))
    st = np.exp(log_s[:, -1])
    if option == "fixed-call":
        return np.maximum(g - strike, 0.0)
    if option == "fixed-put":
        return np.maximum(strike - g, 0.0)
    if option == "float-call":
        return np.maximum(st - g, 0.0)
    if option == "float-put":
        return np.maximum(g - st, 0.0)
    if option == "euro-call":
        return np.maximum(st - strike, 0.0)
    raise DomainError(f"unknown option type {option!r}")


def _estimate(samples: np.ndarray, antithetic: bool, scale: float) -> MCEstimate:
    if antithetic:
        # pairs (i, i + m) within each block were concatenated as [base, -base]
        samples = samples.reshape(-1, 2).mean(axis=1)
    mean = float(np.sum(samples)) / len(samples)
    se = float(np.std(samples, ddof=1)) / math.sqrt(len(samples))
    return MCEstimate(scale * mean, scale * se)


def _collect(kernel, params, T, spec, fns, workers):
    out = [[] for _ in fns]
    for log_s, _ in _blocks(kernel, params, T, spec, workers):
        m = log_s.shape[0]
        for acc, fn in zip(out, fns):
            v = fn(log_s)
            if spec.antithetic:
                half = m // 2
                v = np.stack([v[:half], v[half:]], axis=1).ravel()
            acc.append(v)
    return [np.concatenate(a) for a in out]


def mc_prices(options: Sequence[tuple], T: float, kernel: Kernel, params: ModelParams,
              spec: SimSpec = SimSpec(), workers: int = 1) -> list[MCEstimate]:
    """Discounted mean payoffs for several ``(option, strike)`` pairs on one path set.

    ``option`` is one of ``euro-call``, ``fixed-call``, ``fixed-put``,
    ``float-call``, ``float-put``; ``strike`` is ignored for floating types.
    """
    if not T > 0:
        raise DomainError("T must be positive")
    fns = [lambda ls, o=str(o), k=k: _payoffs(o, k, ls, spec.n_time) for o, k in options]
    disc = math.exp(-params.r * T)
    return [_estimate(v, spec.antithetic, disc)
            for v in _collect(kernel, params, T, spec, fns, workers)]


def mc_price(option: str, strike: float | None, T: float, kernel: Kernel,
             params: ModelParams, spec: SimSpec = SimSpec(), workers: int = 1) -> MCEstimate:
    return mc_prices([(option, strike)], T, kernel, params, spec, workers)[0]


def mc_transform(s: float, w: float, T: float, kernel: Kernel, params: ModelParams,
                 spec: SimSpec = SimSpec(), workers: int = 1) -> MCEstimate:
    """Estimate ``E[exp(s log G + w log S_T)]`` for real ``(s, w)``."""
    def fn(ls):
        return np.exp(s * _log_geo_mean(ls, spec.n_time) + w * ls[:, -1])

    (v,) = _collect(kernel, params, T, spec, [fn], workers)
    return _estimate(v, spec.antithetic, 1.0)
