"""Advance-information signals and conditional simulation under P.

Two signal kinds are supported, both read off the Brownian value at
time T + delta:

  * PointValue        -- the exact value W_{T+delta} = g is known at t=0;
  * IntervalIndicator -- only 1{W_{T+delta} in [a, b]} is known.

For each kind the module evaluates the conditional-density process

    p_t^g = d P(G in . | F_t) / d P(G in .)   evaluated at g,

and draws W_T from the law of W_T given the realized signal.  For the
point signal two sampling modes exist: the exact Gaussian conditioning

    W_T | W_{T+delta} = g  ~  N(g T/(T+delta), T delta/(T+delta))

and a shift recipe that draws W_T = g - N(0, delta).  The shift recipe
is NOT the exact conditional law; it is kept as a selectable mode so
the two can be compared cell by cell (see the CLI report).  Interval
conditioning uses plain rejection on W_{T+delta}, which is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Union

import numpy as np

from .model_core import BrownianPair, ModelParams, brownian_from_price, std_normal_cdf
from .rng import (
    BLOCK_SIZE,
    STREAM_POINT_BRIDGE,
    STREAM_POINT_SHIFT,
    STREAM_REJECTION,
    standard_normal_stream,
)

__all__ = [
    "ConditioningMode",
    "PointValue",
    "IntervalIndicator",
    "SignalSpec",
    "point_signal_from_price",
    "interval_signal_from_prices",
    "density_point",
    "density_indicator",
    "indicator_prob",
    "sample_point_conditional",
    "sample_indicator_conditional",
    "sample_indicator_conditional_with_stats",
    "AcceptanceRateError",
    "RejectionStats",
]


class ConditioningMode(str, Enum):
    """How point-signal conditional draws of W_T are produced."""

    BRIDGE_EXACT = "bridge_exact"
    PAPER_SHIFT = "paper_shift"


@dataclass(frozen=True)
class PointValue:
    """Signal G = W_{T+delta} with realized value g_w (sqrt-year units)."""

    g_w: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.g_w):
            raise ValueError("g_w must be finite")

    def describe(self) -> str:
        return f"point:g_w={self.g_w:.6g}"


@dataclass(frozen=True)
class IntervalIndicator:
    """Signal G = 1{W_{T+delta} in [a_w, b_w]} with observed value 0 or 1."""

    a_w: float
    b_w: float
    observed: int = 1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a_w) and math.isfinite(self.b_w)):
            raise ValueError("interval endpoints must be finite")
        if not self.a_w < self.b_w:
            raise ValueError(f"empty interval: need a_w < b_w, got [{self.a_w}, {self.b_w}]")
        if self.observed not in (0, 1):
            raise ValueError(f"observed must be 0 or 1, got {self.observed}")

    def describe(self) -> str:
        return f"interval:[{self.a_w:.6g},{self.b_w:.6g}]:G={self.observed}"


SignalSpec = Union[PointValue, IntervalIndicator]


def point_signal_from_price(level: float, p: ModelParams) -> PointValue:
    """Point signal from a stock level of S_{T+delta} (table convention)."""
    if level <= 0:
        raise ValueError("stock level must be positive")
    return PointValue(float(brownian_from_price(level, p.t_signal, p)))


def interval_signal_from_prices(lo: float, hi: float, p: ModelParams,
                                observed: int = 1) -> IntervalIndicator:
    """Indicator signal from a stock-price interval for S_{T+delta}."""
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got [{lo}, {hi}]")
    return IntervalIndicator(
        float(brownian_from_price(lo, p.t_signal, p)),
        float(brownian_from_price(hi, p.t_signal, p)),
        observed,
    )


# ---------------------------------------------------------------------------
# conditional density processes
# ---------------------------------------------------------------------------

def density_point(z, w_t, t, p: ModelParams):
    """p_t^z for the point signal:

        sqrt((T+d)/(T+d-t)) * exp(-(z - W_t)^2 / (2(T+d-t)) + z^2 / (2(T+d)))

    Defined for 0 <= t < T + delta (the formula is singular at the
    signal time itself).
    """
    td = p.t_signal
    if not 0 <= t < td:
        raise ValueError(f"need 0 <= t < {td}, got t={t}")
    rem = td - t
    return np.sqrt(td / rem) * np.exp(-((z - w_t) ** 2) / (2.0 * rem) + z * z / (2.0 * td))


def indicator_prob(spec: IntervalIndicator, p: ModelParams) -> float:
    """P(G = spec.observed) for the indicator signal (closed form)."""
    sd = math.sqrt(p.t_signal)
    p_one = float(std_normal_cdf(spec.b_w / sd) - std_normal_cdf(spec.a_w / sd))
    return p_one if spec.observed == 1 else 1.0 - p_one


def density_indicator(value: int, w_t, t, spec: IntervalIndicator, p: ModelParams):
    """p_t^1 or p_t^0 for the indicator signal.

    Ratio of the conditional to the unconditional probability of the
    observed indicator value; at t = T the remaining variance is delta.
    Valid for 0 <= t <= T.
    """
    if value not in (0, 1):
        raise ValueError(f"value must be 0 or 1, got {value}")
    if not 0 <= t <= p.t_expiry:
        raise ValueError(f"need 0 <= t <= {p.t_expiry}, got t={t}")
    rem_sd = math.sqrt(p.t_signal - t)
    sd = math.sqrt(p.t_signal)
    num1 = std_normal_cdf((spec.b_w - w_t) / rem_sd) - std_normal_cdf((spec.a_w - w_t) / rem_sd)
    den1 = float(std_normal_cdf(spec.b_w / sd) - std_normal_cdf(spec.a_w / sd))
    if value == 1:
        return num1 / den1
    return (1.0 - num1) / (1.0 - den1)


# ---------------------------------------------------------------------------
# conditional samplers
# ---------------------------------------------------------------------------

def sample_point_conditional(g_w: float, n: int, mode: ConditioningMode,
                             p: ModelParams, seed: int, workers: int = 1) -> np.ndarray:
    """n draws of W_T given W_{T+delta} = g_w, under the chosen mode.

    bridge_exact samples the exact conditional law
    N(g T/(T+d), T d/(T+d)); paper_shift samples g - N(0, delta).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    mode = ConditioningMode(mode)
    if mode is ConditioningMode.BRIDGE_EXACT:
        z = standard_normal_stream((seed, STREAM_POINT_BRIDGE), n, workers=workers)
        td = p.t_signal
        return g_w * p.t_expiry / td + math.sqrt(p.t_expiry * p.delta / td) * z
    z = standard_normal_stream((seed, STREAM_POINT_SHIFT), n, workers=workers)
    return g_w - math.sqrt(p.delta) * z


class RejectionStats(NamedTuple):
    proposed: int
    accepted: int

    @property
    def rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0


class AcceptanceRateError(RuntimeError):
    """Raised when conditioning on an event too rare to sample by rejection."""


def sample_indicator_conditional_with_stats(
    spec: IntervalIndicator, n: int, p: ModelParams, seed: int,
    workers: int = 1, accept_floor: float = 1e-4,
) -> tuple[BrownianPair, RejectionStats]:
    """Rejection sampling of (W_T, W_{T+delta}) given G = spec.observed.

    Pairs are proposed from the unconditional joint law and kept when
    the indicator matches the observed value, so the accepted pairs
    follow the exact conditional law.  Fails up front when the closed
    form P(G = observed) falls below `accept_floor`, which bounds the
    expected runtime.  Also returns proposal/acceptance counts.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    p_acc = indicator_prob(spec, p)
    if p_acc < accept_floor:
        raise AcceptanceRateError(
            f"P(G={spec.observed}) = {p_acc:.3e} below the acceptance floor {accept_floor:.1e}"
        )
    sd_t = math.sqrt(p.t_expiry)
    sd_d = math.sqrt(p.delta)
    chunks_w, chunks_wd = [], []
    accepted = proposed = 0
    block = 0
    # 8x safety margin on the expected number of proposals
    max_proposed = max(int(8 * n / p_acc), 16 * BLOCK_SIZE)
    while accepted < n:
        if proposed > max_proposed:
            raise AcceptanceRateError(
                f"acceptance rate {accepted / proposed:.3e} after {proposed} proposals"
            )
        n_blocks = max(1, min(64, math.ceil((n - accepted) / (p_acc * BLOCK_SIZE))))
        z = standard_normal_stream(
            (seed, STREAM_REJECTION, block), n_blocks * BLOCK_SIZE, cols=2, workers=workers
        )
        block += 1
        w_t = sd_t * z[:, 0]
        w_td = w_t + sd_d * z[:, 1]
        inside = (w_td >= spec.a_w) & (w_td <= spec.b_w)
        keep = inside if spec.observed == 1 else ~inside
        chunks_w.append(w_t[keep])
        chunks_wd.append(w_td[keep])
        proposed += len(w_t)
        accepted += int(keep.sum())
    pair = BrownianPair(
        np.concatenate(chunks_w)[:n],
        np.concatenate(chunks_wd)[:n],
    )
    return pair, RejectionStats(proposed, accepted)


def sample_indicator_conditional(spec: IntervalIndicator, n: int, p: ModelParams,
                                 seed: int, workers: int = 1,
                                 accept_floor: float = 1e-4) -> BrownianPair:
    """As sample_indicator_conditional_with_stats, returning the pairs only."""
    pair, _ = sample_indicator_conditional_with_stats(
        spec, n, p, seed, workers=workers, accept_floor=accept_floor
    )
    return pair
