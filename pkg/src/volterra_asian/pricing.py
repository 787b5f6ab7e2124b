"""Fourier-inversion prices for European and geometric Asian options.

Payoffs (``G`` is the continuous geometric average of the spot over ``[0, T]``):

============  ======================
fixed call    ``max(G - K, 0)``
fixed put     ``max(K - G, 0)``
float call    ``max(S_T - G, 0)``
float put     ``max(G - S_T, 0)``
============  ======================

Fixed-strike prices at time ``t`` with ``I_t = int_0^t log S_u du`` and
``K_t = K exp(-I_t / T)``::

    C = e^{-r(T-t) + I_t/T} [ (psi(1,0) - K_t)/2 + J ],     P = ... [ (K_t - psi(1,0))/2 + J ]
    J = 1/pi int_0^inf Re( (psi(1+iz,0) - K_t psi(iz,0)) e^{-iz log K_t} / (iz) ) dz

Floating-strike prices with ``A = exp(I_t / T)``::

    C = e^{-r(T-t)} [ (e^{r(T-t)} S_t - A psi(1,0))/2 + J~ ],  P = ... [ (A psi(1,0) - e^{r(T-t)} S_t)/2 + J~ ]
    J~ = 1/pi int_0^inf Re( (A psi(1+iz,-iz) - psi(iz,1-iz)) e^{iz I_t/T} / (iz) ) dz

Call and put share the integral, so put-call parity holds to rounding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np

from .errors import DomainError
from .kernel import Kernel, ModelParams
from .numerics import QuadratureSpec, integrate_semi_infinite
from .riccati import DEFAULT_STEPS
from .transform import ForwardCurve, StatePath, psi0_batch, psi_t_batch

__all__ = [
    "OptionType",
    "PricingRequest",
    "Diagnostics",
    "PriceResult",
    "price",
    "price_european_call",
    "price_fixed_asian",
    "price_float_asian",
    "price_fixed_grid",
    "price_float_pair",
    "parity_residuals",
    "parity_grid",
    "TransformEngine",
]

# Riccati batches larger than this are split to bound memory.
_CHUNK = 2048


class OptionType(str, enum.Enum):
    EUROPEAN_CALL = "euro-call"
    FIXED_CALL = "fixed-call"
    FIXED_PUT = "fixed-put"
    FLOAT_CALL = "float-call"
    FLOAT_PUT = "float-put"

    @property
    def is_fixed(self) -> bool:
        return self in (OptionType.FIXED_CALL, OptionType.FIXED_PUT)

    @property
    def is_floating(self) -> bool:
        return self in (OptionType.FLOAT_CALL, OptionType.FLOAT_PUT)

    @property
    def is_call(self) -> bool:
        return self in (OptionType.EUROPEAN_CALL, OptionType.FIXED_CALL, OptionType.FLOAT_CALL)

    @property
    def needs_strike(self) -> bool:
        return not self.is_floating


@dataclass(frozen=True)
class PricingRequest:
    option: OptionType
    T: float
    strike: float | None = None
    valuation: StatePath | None = None
    curve: ForwardCurve | None = None
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    n_steps: int = DEFAULT_STEPS
    scheme: str = "implicit"

    def __post_init__(self):
        object.__setattr__(self, "option", OptionType(self.option))
        if not self.T > 0:
            raise DomainError(f"maturity must be positive, got {self.T}")
        if self.option.needs_strike:
            if self.strike is None or not self.strike > 0:
                raise DomainError(f"{self.option.value} needs a positive strike, got {self.strike}")
        elif self.strike is not None:
            raise DomainError(f"{self.option.value} has a floating strike; do not pass K")
        if self.n_steps < 2:
            raise DomainError("n_steps must be at least 2")
        t = 0.0 if self.valuation is None else self.valuation.t
        if t > 0 and self.curve is None:
            raise DomainError("pricing at t > 0 needs the forward variance curve xi_t")
        if t >= self.T:
            raise DomainError("valuation time must precede maturity")
        if self.option is OptionType.EUROPEAN_CALL and t > 0:
            raise DomainError("European pricing is implemented at t = 0 only")


@dataclass(frozen=True)
class Diagnostics:
    quad_nodes: int
    riccati_steps: int
    upper_truncation: float
    psi10: complex
    quad_error: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["psi10"] = [self.psi10.real, self.psi10.imag]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Diagnostics":
        d = dict(d)
        re, im = d.pop("psi10")
        return cls(psi10=complex(re, im), **d)


@dataclass(frozen=True)
class PriceResult:
    price: float
    diagnostics: Diagnostics

    def to_dict(self) -> dict:
        return {"price": self.price, "diagnostics": self.diagnostics.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PriceResult":
        return cls(float(d["price"]), Diagnostics.from_dict(d["diagnostics"]))


class TransformEngine:
    """Batched ``psi_t(s, w)`` for one ``(kernel, params, T, valuation)``.

    ``psi(1, 0)`` is computed once and cached.
    """

    def __init__(self, kernel: Kernel, params: ModelParams, T: float, n_steps: int = DEFAULT_STEPS,
                 state: StatePath | None = None, curve: ForwardCurve | None = None,
                 scheme: str = "implicit"):
        self.kernel, self.params, self.T = kernel, params, float(T)
        self.n_steps, self.scheme = int(n_steps), scheme
        self.state = StatePath.initial(params) if state is None else state
        self.curve = curve
        self._psi10 = None

    def __call__(self, s, w):
        s, w = np.broadcast_arrays(np.atleast_1d(np.asarray(s, complex)),
                                   np.atleast_1d(np.asarray(w, complex)))
        out = np.empty(s.shape, dtype=complex)
        for i in range(0, len(s), _CHUNK):
            sl = slice(i, i + _CHUNK)
            if self.state.t == 0:
                out[sl] = psi0_batch(s[sl], w[sl], self.T, self.kernel, self.params,
                                     self.n_steps, self.scheme)
            else:
                out[sl] = psi_t_batch(s[sl], w[sl], self.T, self.state, self.curve, self.kernel,
                                      self.params, self.n_steps, self.scheme)
        return out

    @property
    def psi10(self) -> complex:
        if self._psi10 is None:
            self._psi10 = complex(self(1.0, 0.0)[0])
        return self._psi10


def _engine(req: PricingRequest, kernel, params) -> TransformEngine:
    return TransformEngine(kernel, params, req.T, req.n_steps, req.valuation, req.curve, req.scheme)


def _integrate(f: Callable, quad: QuadratureSpec):
    res = integrate_semi_infinite(f, quad, full_output=True)
    if quad.lower > 0:
        # the integrands have finite limits at 0; a midpoint value covers [0, lower]
        head = quad.lower * f(np.array([0.5 * quad.lower]))[0]
        res = res._replace(value=res.value + head, nodes=res.nodes + 1)
    return res


def _fixed_integrand(engine: TransformEngine, strikes_t: np.ndarray):
    log_k = np.log(strikes_t)

    def f(z):
        a = engine(1.0 + 1j * z, 0.0)
        b = engine(1j * z, 0.0)
        num = (a[:, None] - strikes_t[None, :] * b[:, None]) * np.exp(-1j * np.outer(z, log_k))
        return (num / (1j * z[:, None])).real

    return f


def price_fixed_grid(strikes, T, kernel: Kernel, params: ModelParams,
                     quad: QuadratureSpec = QuadratureSpec(), n_steps: int = DEFAULT_STEPS,
                     state: StatePath | None = None, curve: ForwardCurve | None = None,
                     scheme: str = "implicit"):
    """Fixed-strike call and put prices for several strikes sharing one quadrature.

    Returns ``(calls, puts, diagnostics)``; the adaptive rule refines until the
    worst strike meets the tolerance.
    """
    engine = TransformEngine(kernel, params, T, n_steps, state, curve, scheme)
    st = engine.state
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    if np.any(strikes <= 0):
        raise DomainError("strikes must be positive")
    shift = st.running_log_integral / T
    strikes_t = strikes * math.exp(-shift)
    res = _integrate(_fixed_integrand(engine, strikes_t), quad)
    j = np.atleast_1d(res.value) / math.pi
    psi10 = engine.psi10.real
    pre = math.exp(-params.r * (T - st.t) + shift)
    calls = pre * (0.5 * (psi10 - strikes_t) + j)
    puts = pre * (0.5 * (strikes_t - psi10) + j)
    diag = Diagnostics(res.nodes, n_steps, quad.upper, engine.psi10, res.error)
    return calls, puts, diag


def price_float_pair(T, kernel: Kernel, params: ModelParams,
                     quad: QuadratureSpec = QuadratureSpec(), n_steps: int = DEFAULT_STEPS,
                     state: StatePath | None = None, curve: ForwardCurve | None = None,
                     scheme: str = "implicit"):
    """Floating-strike ``(call, put, diagnostics)``; both share one integral."""
    engine = TransformEngine(kernel, params, T, n_steps, state, curve, scheme)
    st = engine.state
    shift = st.running_log_integral / T
    avg = math.exp(shift)

    def f(z):
        a = engine(1.0 + 1j * z, -1j * z)
        b = engine(1j * z, 1.0 - 1j * z)
        return ((avg * a - b) * np.exp(1j * z * shift) / (1j * z)).real

    res = _integrate(f, quad)
    j = float(res.value) / math.pi
    tau = T - st.t
    fwd_spot = math.exp(params.r * tau + st.log_spot)
    mean_g = avg * engine.psi10.real
    disc = math.exp(-params.r * tau)
    call = disc * (0.5 * (fwd_spot - mean_g) + j)
    put = disc * (0.5 * (mean_g - fwd_spot) + j)
    diag = Diagnostics(res.nodes, n_steps, quad.upper, engine.psi10, res.error)
    return call, put, diag


def price_fixed_asian(req: PricingRequest, kernel: Kernel, params: ModelParams) -> PriceResult:
    if not req.option.is_fixed:
        raise DomainError(f"{req.option.value} is not a fixed-strike Asian option")
    calls, puts, diag = price_fixed_grid([req.strike], req.T, kernel, params, req.quad,
                                         req.n_steps, req.valuation, req.curve, req.scheme)
    value = calls[0] if req.option.is_call else puts[0]
    return PriceResult(float(value), diag)


def price_float_asian(req: PricingRequest, kernel: Kernel, params: ModelParams) -> PriceResult:
    if not req.option.is_floating:
        raise DomainError(f"{req.option.value} is not a floating-strike Asian option")
    call, put, diag = price_float_pair(req.T, kernel, params, req.quad, req.n_steps,
                                       req.valuation, req.curve, req.scheme)
    return PriceResult(float(call if req.option.is_call else put), diag)


def european_call_grid(strikes, T, kernel: Kernel, params: ModelParams,
                       quad: QuadratureSpec = QuadratureSpec(), n_steps: int = DEFAULT_STEPS,
                       scheme: str = "implicit", cf: Callable | None = None):
    """European calls ``S0 Pi1 - e^{-rT} K Pi2`` for several strikes.

    ``cf(w)`` must return ``E[exp(w log S_T)]`` for complex ``w`` with
    ``0 <= Re w <= 1``; by default the Volterra transform ``psi_0(0, w)``.
    Returns ``(prices, diagnostics)``.
    """
    if cf is None:
        engine = TransformEngine(kernel, params, T, n_steps, scheme=scheme)

        def cf(w):
            return engine(np.zeros_like(w), w)

    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    log_k = np.log(strikes)
    # psi(-i) = E[S_T], the normalizer of the share measure
    norm = complex(cf(np.array([1.0 + 0j]))[0])

    def f(u):
        phase = np.exp(-1j * np.outer(u, log_k))
        shifted = cf(1.0 + 1j * u)[:, None] / norm
        plain = cf(1j * u)[:, None]
        iu = 1j * u[:, None]
        return np.concatenate([(phase * shifted / iu).real, (phase * plain / iu).real], axis=1)

    res = _integrate(f, quad)
    vals = np.atleast_1d(res.value)
    n = len(strikes)
    pi1 = 0.5 + vals[:n] / math.pi
    pi2 = 0.5 + vals[n:] / math.pi
    prices = params.s0 * pi1 - math.exp(-params.r * T) * strikes * pi2
    return prices, Diagnostics(res.nodes, n_steps, quad.upper, norm, res.error)


def price_european_call(req: PricingRequest, kernel: Kernel, params: ModelParams) -> PriceResult:
    if req.option is not OptionType.EUROPEAN_CALL:
        raise DomainError(f"{req.option.value} is not a European call")
    prices, diag = european_call_grid([req.strike], req.T, kernel, params, req.quad,
                                      req.n_steps, req.scheme)
    return PriceResult(float(prices[0]), diag)


def price(req: PricingRequest, kernel: Kernel, params: ModelParams) -> PriceResult:
    """Dispatch on ``req.option``."""
    if req.option is OptionType.EUROPEAN_CALL:
        return price_european_call(req, kernel, params)
    if req.option.is_fixed:
        return price_fixed_asian(req, kernel, params)
    return price_float_asian(req, kernel, params)


def parity_grid(T, strikes, kernel: Kernel, params: ModelParams,
                quad: QuadratureSpec = QuadratureSpec(), n_steps: int = DEFAULT_STEPS,
                scheme: str = "implicit"):
    """Parity residuals for several strikes at one maturity.

    Returns ``(fixed, floating)``: an array over strikes and one float.
    """
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    calls, puts, diag = price_fixed_grid(strikes, T, kernel, params, quad, n_steps, scheme=scheme)
    fc, fp, _ = price_float_pair(T, kernel, params, quad, n_steps, scheme=scheme)
    disc = math.exp(-params.r * T)
    psi10 = diag.psi10.real
    fixed = np.abs(calls - puts - disc * (psi10 - strikes))
    floating = abs(fc - fp - (params.s0 - disc * psi10))
    return fixed, float(floating)


def parity_residuals(T, K, kernel: Kernel, params: ModelParams,
                     quad: QuadratureSpec = QuadratureSpec(), n_steps: int = DEFAULT_STEPS,
                     scheme: str = "implicit") -> dict:
    """Put-call parity residuals at ``t = 0``.

    fixed:    ``|C - P - e^{-rT} (psi(1,0) - K)|``
    floating: ``|C~ - P~ - (S0 - e^{-rT} psi(1,0))|``
    """
    fixed, floating = parity_grid(T, [K], kernel, params, quad, n_steps, scheme)
    return {"fixed": float(fixed[0]), "floating": floating}
