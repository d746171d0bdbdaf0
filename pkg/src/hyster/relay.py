"""Single relay operators.

The static (rate-independent) relay switches instantaneously between -1 and
+1 when the input reaches its thresholds.  The dynamic relay moves at a finite
rate ``k * (distance past threshold)`` and may rest anywhere in [-1, 1].

All inputs are piecewise linear in time, which lets the dynamic relay be
integrated exactly: threshold crossings are roots of linear functions and
saturation instants are roots of quadratics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "ThresholdPair",
    "Signal",
    "RelayTrace",
    "RelayConfig",
    "eval_g",
    "classical_relay",
    "dynamic_relay",
    "yosida_relay_oracle",
    "reconstruct_multiplier",
    "advance_relays",
]

# Breakpoints closer than this fraction of a segment to an existing time are merged.
_BREAKPOINT_MERGE = 1e-12
_DISCRIMINANT_CLAMP = 1e-14


@dataclass(frozen=True)
class ThresholdPair:
    rho1: float
    rho2: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rho1) and math.isfinite(self.rho2)):
            raise ValueError(f"thresholds must be finite, got ({self.rho1}, {self.rho2})")
        if not self.rho1 < self.rho2:
            raise ValueError(f"need rho1 < rho2, got ({self.rho1}, {self.rho2})")


@dataclass(frozen=True, eq=False)
class Signal:
    """Piecewise-linear scalar signal given by samples at strictly increasing times."""

    times: np.ndarray
    values: np.ndarray

    def __init__(self, times: Sequence[float], values: Sequence[float]):
        t = np.array(times, dtype=float).reshape(-1)
        v = np.array(values, dtype=float).reshape(-1)
        if t.size == 0 or t.size != v.size:
            raise ValueError("times and values must be non-empty and of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("signal contains non-finite samples")
        if np.any(np.diff(t) <= 0):
            raise ValueError("signal times must be strictly increasing")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.times.size

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def refine(self, extra_times) -> "Signal":
        """Insert samples of the interpolant at ``extra_times`` (inside the time range)."""
        extra = np.asarray(extra_times, dtype=float).reshape(-1)
        extra = extra[(extra >= self.times[0]) & (extra <= self.times[-1])]
        t = np.union1d(self.times, extra)
        v = np.interp(t, self.times, self.values)
        # keep original samples bit-exact
        idx = np.searchsorted(t, self.times)
        v[idx] = self.values
        return Signal(t, v)

    @classmethod
    def sampled(cls, func, t_end: float, dt: float, t_start: float = 0.0) -> "Signal":
        n = max(1, int(round((t_end - t_start) / dt)))
        t = np.linspace(t_start, t_end, n + 1)
        return cls(t, func(t))


@dataclass(frozen=True, eq=False)
class RelayTrace:
    times: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return self.times.size

    def at(self, t):
        """Linear interpolation of the trace (exact on saturated and dead-band pieces)."""
        return np.interp(t, self.times, self.values)


@dataclass(frozen=True)
class RelayConfig:
    rho: ThresholdPair
    k: float
    xi: float

    def __post_init__(self) -> None:
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ValueError(f"k must be positive and finite, got {self.k}")
        if not -1.0 <= self.xi <= 1.0:
            raise ValueError(f"initial state must lie in [-1, 1], got {self.xi}")


def eval_g(u, rho: ThresholdPair, k: float):
    """Driving rate ``-k (u - rho1)^- + k (u - rho2)^+``; zero on the dead band."""
    u = np.asarray(u, dtype=float)
    out = -k * np.maximum(rho.rho1 - u, 0.0) + k * np.maximum(u - rho.rho2, 0.0)
    return out if out.ndim else float(out)


def classical_relay(signal: Signal, rho: ThresholdPair, xi: int) -> RelayTrace:
    """Rate-independent relay evaluated at the signal sample times.

    Between two samples the input is affine, so it can only enter the dead band
    through the threshold it was beyond at the previous sample.  The output at
    a sample therefore only depends on where that sample lies.
    """
    if xi not in (-1, 1):
        raise ValueError(f"classical relay needs xi in {{-1, +1}}, got {xi}")
    u = signal.values
    y = np.empty_like(u)
    state = float(xi)
    for i, ui in enumerate(u):
        if ui >= rho.rho2:
            state = 1.0
        elif ui <= rho.rho1:
            state = -1.0
        y[i] = state
    return RelayTrace(signal.times.copy(), y)


def _crossing_fractions(ua: float, ub: float, rho: ThresholdPair) -> list[float]:
    cuts = []
    for level in (rho.rho1, rho.rho2):
        if (ua - level) * (ub - level) < 0.0:
            theta = (level - ua) / (ub - ua)
            if _BREAKPOINT_MERGE < theta < 1.0 - _BREAKPOINT_MERGE:
                cuts.append(theta)
    cuts.sort()
    return cuts


def _saturation_time(excess_a: float, excess_b: float, tau: float, k: float, gap: float) -> float:
    """Earliest s in [0, tau] with k * int_0^s excess = gap (excess affine, >= 0)."""
    a2 = 0.5 * k * (excess_b - excess_a) / tau
    a1 = k * excess_a
    disc = a1 * a1 + 4.0 * a2 * gap
    if disc < 0.0:
        if disc < -_DISCRIMINANT_CLAMP * max(1.0, a1 * a1):
            return tau
        disc = 0.0
    denom = a1 + math.sqrt(disc)
    if denom <= 0.0:
        return tau
    return min(tau, max(0.0, 2.0 * gap / denom))


def dynamic_relay(signal: Signal, config: RelayConfig) -> RelayTrace:
    """Exact solution of the dynamic relay on a piecewise-linear input.

    The returned trace holds every input sample time plus the threshold
    crossings and saturation instants, so the relay is affine-in-rate (quadratic
    or constant) between consecutive trace times.
    """
    rho, k = config.rho, config.k
    times, values = signal.times, signal.values
    y = float(config.xi)
    out_t = [float(times[0])]
    out_y = [y]

    def push(t: float, value: float, end: float) -> None:
        # a breakpoint that rounds onto its neighbour is merged into it
        if t <= out_t[-1]:
            out_y[-1] = value
        elif t < end or t == end == tb:
            out_t.append(t)
            out_y.append(value)

    for i in range(len(times) - 1):
        ta, tb = float(times[i]), float(times[i + 1])
        ua, ub = float(values[i]), float(values[i + 1])
        fractions = [0.0, *_crossing_fractions(ua, ub, rho), 1.0]
        for j in range(len(fractions) - 1):
            f0, f1 = fractions[j], fractions[j + 1]
            p0 = ta + f0 * (tb - ta)
            p1 = tb if f1 == 1.0 else ta + f1 * (tb - ta)
            v0 = ua + f0 * (ub - ua)
            v1 = ub if f1 == 1.0 else ua + f1 * (ub - ua)
            tau = p1 - p0
            mid = 0.5 * (v0 + v1)
            if mid > rho.rho2:
                e0, e1 = max(v0 - rho.rho2, 0.0), max(v1 - rho.rho2, 0.0)
                gap = 1.0 - y
                if gap > 0.0:
                    rise = k * 0.5 * (e0 + e1) * tau
                    if rise >= gap:
                        s = _saturation_time(e0, e1, tau, k, gap)
                        if _BREAKPOINT_MERGE * tau < s < tau * (1.0 - _BREAKPOINT_MERGE):
                            push(p0 + s, 1.0, p1)
                        y = 1.0
                    else:
                        y += rise
            elif mid < rho.rho1:
                e0, e1 = max(rho.rho1 - v0, 0.0), max(rho.rho1 - v1, 0.0)
                gap = y + 1.0
                if gap > 0.0:
                    fall = k * 0.5 * (e0 + e1) * tau
                    if fall >= gap:
                        s = _saturation_time(e0, e1, tau, k, gap)
                        if _BREAKPOINT_MERGE * tau < s < tau * (1.0 - _BREAKPOINT_MERGE):
                            push(p0 + s, -1.0, p1)
                        y = -1.0
                    else:
                        y -= fall
            push(p1, y, tb)

    return RelayTrace(np.array(out_t), np.array(out_y))


def yosida_relay_oracle(
    signal: Signal,
    config: RelayConfig,
    mu: float = 1e-6,
    delta: float = 1e-7,
) -> RelayTrace:
    """Fixed-step integration of the Yosida-regularized relay.

    Solves ``y' + (y - clip(y, -1, 1)) / mu = g(u(t))`` from ``y(0) = xi``.  In
    each step the forcing is frozen at the step midpoint and the affine ODE of
    the current region (free, upper penalty, lower penalty) is integrated
    exactly.  The raw trajectory is returned; it overshoots [-1, 1] by
    roughly ``mu * |g|`` while the relay is pushed against a bound.
    """
    if not (mu > 0 and delta > 0):
        raise ValueError("mu and delta must be positive")
    if delta > 0.5 * mu:
        raise ValueError(f"delta={delta} exceeds mu/2={0.5 * mu}; refuse unstable step")

    t0, t1 = float(signal.times[0]), float(signal.times[-1])
    n_steps = max(1, int(math.ceil((t1 - t0) / delta * (1.0 - 1e-12))))
    h = (t1 - t0) / n_steps
    grid = t0 + h * np.arange(n_steps + 1)
    grid[-1] = t1
    forcing = np.asarray(eval_g(signal(grid[:-1] + 0.5 * h), config.rho, config.k), dtype=float)
    decay = math.exp(-h / mu)

    y = np.empty(n_steps + 1)
    y[0] = config.xi
    n = 0
    # Integrate assuming the current region persists, then restart at the first
    # step whose state left it.  Equivalent to per-step region detection.
    while n < n_steps:
        region = _region(y[n])
        if region == 0:
            seq = np.cumsum(np.concatenate(([y[n]], h * forcing[n:])))[1:]
        else:
            drive = (1.0 - decay) * (region + mu * forcing[n:])
            seq, _ = lfilter([1.0], [1.0, -decay], drive, zi=[decay * y[n]])
        regions = np.where(seq > 1.0, 1, np.where(seq < -1.0, -1, 0))
        changed = np.flatnonzero(regions != region)
        stop = changed[0] + 1 if changed.size else seq.size
        y[n + 1 : n + 1 + stop] = seq[:stop]
        n += stop
    return RelayTrace(grid, y)


def _region(y: float) -> int:
    if y > 1.0:
        return 1
    if y < -1.0:
        return -1
    return 0


def reconstruct_multiplier(
    trace: RelayTrace, signal: Signal, rho: ThresholdPair, k: float
) -> Signal:
    """Lagrange multiplier ``q = g(u) - dy/dt`` sampled at trace-piece midpoints.

    ``trace`` must come from :func:`dynamic_relay` on ``signal`` so that every
    piece lies in a single input region.
    """
    t = trace.times
    if t[0] != signal.times[0] or t[-1] != signal.times[-1]:
        raise ValueError("trace and signal cover different time ranges")
    if not np.all(np.isin(signal.times, t)):
        raise ValueError("trace grid does not contain all signal sample times")
    mid = 0.5 * (t[:-1] + t[1:])
    slope = np.diff(trace.values) / np.diff(t)
    q = np.asarray(eval_g(signal(mid), rho, k)) - slope
    return Signal(mid, q)


def _positive_part_integral(fa, fb, dt):
    """Integral over [0, dt] of the positive part of the affine function fa -> fb."""
    both = (fa >= 0.0) & (fb >= 0.0)
    mixed = (fa > 0.0) != (fb > 0.0)
    top = np.maximum(np.maximum(fa, fb), 0.0)
    span = np.abs(fb - fa)
    with np.errstate(divide="ignore", invalid="ignore"):
        partial = np.where(mixed & ~both, top * top / (2.0 * span), 0.0)
    return dt * np.where(both, 0.5 * (fa + fb), partial)


def advance_relays(y0, u0, u1, dt: float, rho1, rho2, k: float):
    """End values of many dynamic relays over one affine input segment.

    Arrays broadcast against each other, e.g. ``u0`` of shape ``(nodes, 1)``
    against thresholds of shape ``(relays,)``.  On a rising segment the input
    visits the lower region before the upper one, on a falling segment the
    reverse; within each region the relay is monotone, so clipping the
    accumulated increment is exact.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    u0 = np.asarray(u0, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    up = k * _positive_part_integral(u0 - rho2, u1 - rho2, dt)
    down = k * _positive_part_integral(rho1 - u0, rho1 - u1, dt)
    rising = u1 >= u0
    after_rise = np.minimum(1.0, np.maximum(-1.0, y0 - down) + up)
    after_fall = np.maximum(-1.0, np.minimum(1.0, y0 + up) - down)
    return np.where(rising, after_rise, after_fall)
