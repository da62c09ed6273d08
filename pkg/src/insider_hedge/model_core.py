"""Black-Scholes market primitives with zero interest rate.

Price dynamics under the physical measure P:

    dS_t = sigma * S_t dW_t + mu * S_t dt,   S_t = S0 * exp(sigma*W_t + (mu - sigma^2/2) t)

The market price of risk is theta = mu / sigma and the risk-neutral
density process is Z_t = exp(-theta*W_t - theta^2 t / 2).  The interest
rate is hard-wired to zero, so no discounting appears anywhere and the
perfect-hedge cost of a claim is its plain risk-neutral expectation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from .rng import STREAM_PAIRS, standard_normal_stream

__all__ = [
    "ModelParams",
    "BrownianPair",
    "std_normal_cdf",
    "price_from_brownian",
    "brownian_from_price",
    "rn_density",
    "bs_call_price",
    "sample_brownian_pairs",
]


@dataclass(frozen=True)
class ModelParams:
    """Market and claim parameters.

    mu, sigma  : drift and volatility per year (sigma > 0)
    s0         : initial stock price (> 0)
    strike     : call strike (>= 0)
    t_expiry   : hedge horizon T in years (> 0)
    delta      : lead time of the advance information in years (> 0)
    """

    mu: float
    sigma: float
    s0: float
    strike: float
    t_expiry: float
    delta: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in
                   (self.mu, self.sigma, self.s0, self.strike, self.t_expiry, self.delta)):
            raise ValueError("all parameters must be finite")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.s0 <= 0:
            raise ValueError(f"s0 must be positive, got {self.s0}")
        if self.strike < 0:
            raise ValueError(f"strike must be nonnegative, got {self.strike}")
        if self.t_expiry <= 0:
            raise ValueError(f"t_expiry must be positive, got {self.t_expiry}")
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @property
    def theta(self) -> float:
        """Market price of risk mu / sigma."""
        return self.mu / self.sigma

    @property
    def t_signal(self) -> float:
        """Time T + delta at which the advance information is revealed."""
        return self.t_expiry + self.delta


class BrownianPair(NamedTuple):
    """Brownian values at the hedge horizon and at the signal time.

    Fields hold scalars or aligned arrays; w_tdelta - w_t is the
    independent N(0, delta) increment.
    """

    w_t: np.ndarray
    w_tdelta: np.ndarray


def std_normal_cdf(x):
    """Standard normal CDF, accurate to ~1e-15 (erfc based)."""
    return ndtr(x)


def price_from_brownian(w, t, p: ModelParams):
    """Stock level at time t for Brownian value w."""
    return p.s0 * np.exp(p.sigma * w + (p.mu - 0.5 * p.sigma**2) * t)


def brownian_from_price(s, t, p: ModelParams):
    """Inverse of price_from_brownian: the Brownian value implying level s at time t."""
    return (np.log(s / p.s0) - (p.mu - 0.5 * p.sigma**2) * t) / p.sigma


def rn_density(w, p: ModelParams, t: float | None = None):
    """Density dQ_F/dP restricted to time t, evaluated at W_t = w.

    Defaults to t = t_expiry, the horizon at which all hedging
    quantities are assembled.  Strictly positive for finite inputs.
    """
    if t is None:
        t = p.t_expiry
    th = p.theta
    return np.exp(-th * w - 0.5 * th * th * t)


def bs_call_price(p: ModelParams, s0: float | None = None, strike: float | None = None,
                  t_expiry: float | None = None, sigma: float | None = None) -> float:
    """Zero-rate Black-Scholes call price S0*Phi(d1) - K*Phi(d2).

    The keyword overrides make parameter-grid checks cheap without
    building new ModelParams.  Degenerate sigma*sqrt(T) == 0 and
    strike == 0 return the intrinsic value / spot so the function stays
    total on limiting inputs.
    """
    s = p.s0 if s0 is None else s0
    k = p.strike if strike is None else strike
    t = p.t_expiry if t_expiry is None else t_expiry
    vol = p.sigma if sigma is None else sigma
    sig_sqrt_t = vol * math.sqrt(t)
    if k == 0.0:
        return s
    if sig_sqrt_t == 0.0:
        return max(s - k, 0.0)
    d1 = (math.log(s / k) + 0.5 * sig_sqrt_t**2) / sig_sqrt_t
    d2 = d1 - sig_sqrt_t
    return float(s * ndtr(d1) - k * ndtr(d2))


def sample_brownian_pairs(n: int, p: ModelParams, seed: int, workers: int = 1) -> BrownianPair:
    """n independent draws of (W_T, W_{T+delta}) under P.

    W_T ~ N(0, T) and the increment ~ N(0, delta) is independent of it.
    Output is bit-identical for identical (n, seed) regardless of
    `workers` (see rng module).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    z = standard_normal_stream((seed, STREAM_PAIRS), n, cols=2, workers=workers)
    w_t = math.sqrt(p.t_expiry) * z[:, 0]
    w_tdelta = w_t + math.sqrt(p.delta) * z[:, 1]
    return BrownianPair(w_t, w_tdelta)
