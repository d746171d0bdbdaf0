"""Preisach operators as weighted relay ensembles over a discretized triangle."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .relay import RelayTrace, Signal, ThresholdPair, advance_relays

__all__ = [
    "LorentzianParams",
    "TriangleQuadrature",
    "EnsembleState",
    "lorentzian_density",
    "discretize_triangle",
    "total_weight",
    "demagnetized_state",
    "split_ties",
    "classical_preisach",
    "preisach_step",
    "dynamic_preisach",
    "write_ensemble_csv",
]


@dataclass(frozen=True)
class LorentzianParams:
    N: float = 1.0 / 2000.0
    omega: float = 5.0
    gamma: float = 4.0

    def __post_init__(self) -> None:
        for name in ("N", "omega", "gamma"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"Lorentzian parameter {name} must be positive, got {value}")


@dataclass(frozen=True, eq=False)
class TriangleQuadrature:
    """Centroid rule on a uniform subdivision of the Preisach triangle.

    ``rho1``/``rho2`` hold node thresholds, ``weights`` the density times the
    subtriangle area.  Nodes are ordered by subdivision cell.
    """

    rho0: float
    n: int
    rho1: np.ndarray
    rho2: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return self.weights.size

    @property
    def nodes(self) -> list[ThresholdPair]:
        return [ThresholdPair(float(a), float(b)) for a, b in zip(self.rho1, self.rho2)]


@dataclass(frozen=True, eq=False)
class EnsembleState:
    y: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        if np.any(np.abs(y) > 1.0):
            raise ValueError("relay states must lie in [-1, 1]")
        object.__setattr__(self, "y", y)


Density = Union[LorentzianParams, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def lorentzian_density(rho1, rho2, params: LorentzianParams = LorentzianParams()):
    """Factorized-Lorentzian density; accepts scalars, arrays or a ThresholdPair as ``rho1``."""
    if isinstance(rho1, ThresholdPair):
        rho1, rho2 = rho1.rho1, rho1.rho2
    width = params.gamma * params.omega
    a = (np.asarray(rho2, dtype=float) - params.omega) / width
    b = (np.asarray(rho1, dtype=float) + params.omega) / width
    # single product of the two factors keeps p(r1, r2) == p(-r2, -r1) bit for bit
    out = params.N * ((1.0 / (1.0 + a * a)) * (1.0 / (1.0 + b * b)))
    return out if np.ndim(out) else float(out)


def discretize_triangle(rho0: float, n: int, density: Density = LorentzianParams()) -> TriangleQuadrature:
    """Split the triangle {-rho0 <= rho1 <= rho2 <= rho0} into n^2 congruent pieces.

    The square grid of spacing ``h = 2 rho0 / n`` is cut along diagonals parallel
    to rho1 = rho2; cells above the diagonal contribute two right triangles,
    diagonal cells one.  Centroids are formed from integer numerators so the
    mirror symmetry (rho1, rho2) -> (-rho2, -rho1) holds exactly.
    """
    if not rho0 > 0:
        raise ValueError(f"rho0 must be positive, got {rho0}")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    num1, num2 = [], []
    for i in range(n):
        for j in range(i, n):
            # upper-left piece of cell (i, j): centroid (i + 1/3, j + 2/3) in cell units
            num1.append(6 * i + 2 - 3 * n)
            num2.append(6 * j + 4 - 3 * n)
            if j > i:
                num1.append(6 * i + 4 - 3 * n)
                num2.append(6 * j + 2 - 3 * n)
    scale = 3 * n
    rho1 = rho0 * np.array(num1, dtype=float) / scale
    rho2 = rho0 * np.array(num2, dtype=float) / scale
    if isinstance(density, LorentzianParams):
        p = lorentzian_density(rho1, rho2, density)
    else:
        p = np.broadcast_to(np.asarray(density(rho1, rho2), dtype=float), rho1.shape)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("density must be finite and non-negative")
    area = (2.0 * rho0) ** 2 / (2.0 * n * n)
    return TriangleQuadrature(rho0, n, rho1, rho2, np.array(p * area, dtype=float))


def total_weight(quad: TriangleQuadrature) -> float:
    """Saturation bound of every Preisach output under ``quad``."""
    return float(np.sum(quad.weights))


def demagnetized_state(quad: TriangleQuadrature, two_state: bool = False) -> EnsembleState:
    """Virgin state: -1 where rho1 + rho2 > 0, +1 where < 0.

    Nodes on the anti-diagonal get 0 for the dynamic model.  With
    ``two_state=True`` they get -1, except that repeated copies of the same
    tie node (see :func:`split_ties`) alternate -1, +1 so their sum vanishes.
    """
    s = quad.rho1 + quad.rho2
    y = np.where(s > 0, -1.0, np.where(s < 0, 1.0, 0.0))
    if two_state:
        seen: dict[tuple[float, float], int] = {}
        for idx in np.flatnonzero(s == 0):
            key = (float(quad.rho1[idx]), float(quad.rho2[idx]))
            count = seen.get(key, 0)
            y[idx] = -1.0 if count % 2 == 0 else 1.0
            seen[key] = count + 1
    return EnsembleState(y)


def split_ties(quad: TriangleQuadrature) -> TriangleQuadrature:
    """Duplicate each anti-diagonal node into two half-weight copies.

    The relay ensemble is unchanged as an operator, but a two-state initial
    condition can now assign opposite values to the copies.
    """
    tie = (quad.rho1 + quad.rho2) == 0
    rep = np.where(tie, 2, 1)
    weights = np.repeat(np.where(tie, 0.5 * quad.weights, quad.weights), rep)
    return TriangleQuadrature(
        quad.rho0, quad.n, np.repeat(quad.rho1, rep), np.repeat(quad.rho2, rep), weights
    )


def _weighted_sum(y: np.ndarray, weights: np.ndarray):
    # numpy pairwise reduction along the last axis: fixed order, no BLAS threading
    return np.add.reduce(y * weights, axis=-1)


def classical_preisach(signal: Signal, quad: TriangleQuadrature, state0: EnsembleState) -> RelayTrace:
    y = np.array(state0.y, dtype=float)
    if y.shape != quad.weights.shape:
        raise ValueError("initial state does not match the quadrature")
    if not np.all((y == 1.0) | (y == -1.0)):
        raise ValueError("classical relays need initial states in {-1, +1}")
    out = np.empty(len(signal))
    for i, u in enumerate(signal.values):
        y = np.where(u >= quad.rho2, 1.0, np.where(u <= quad.rho1, -1.0, y))
        out[i] = _weighted_sum(y, quad.weights)
    return RelayTrace(signal.times.copy(), out)


def preisach_step(
    state: EnsembleState,
    u_prev: float,
    u_next: float,
    dt: float,
    k: float,
    quad: TriangleQuadrature,
) -> tuple[float, EnsembleState]:
    """Advance every relay over one affine input segment; return (output, new state)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    y = advance_relays(state.y, u_prev, u_next, dt, quad.rho1, quad.rho2, k)
    return float(_weighted_sum(y, quad.weights)), EnsembleState(y)


def dynamic_preisach(
    signal: Signal, quad: TriangleQuadrature, state0: EnsembleState, k: float
) -> RelayTrace:
    """Dynamic Preisach output at the signal sample times."""
    if state0.y.shape != quad.weights.shape:
        raise ValueError("initial state does not match the quadrature")
    t, u = signal.times, signal.values
    out = np.empty(t.size)
    out[0] = _weighted_sum(state0.y, quad.weights)
    state = state0
    for i in range(t.size - 1):
        out[i + 1], state = preisach_step(state, u[i], u[i + 1], t[i + 1] - t[i], k, quad)
    return RelayTrace(t.copy(), out)


def dynamic_preisach_states(
    signal: Signal, quad: TriangleQuadrature, state0: EnsembleState, k: float, at_times
) -> list[EnsembleState]:
    """Relay configurations at the sample times nearest to ``at_times``."""
    t, u = signal.times, signal.values
    wanted = {int(np.argmin(np.abs(t - s))) for s in np.atleast_1d(at_times)}
    snaps: dict[int, EnsembleState] = {}
    state = state0
    if 0 in wanted:
        snaps[0] = state
    for i in range(t.size - 1):
        _, state = preisach_step(state, u[i], u[i + 1], t[i + 1] - t[i], k, quad)
        if i + 1 in wanted:
            snaps[i + 1] = state
    return [snaps[i] for i in sorted(snaps)]


def write_ensemble_csv(path, quad: TriangleQuadrature, state: EnsembleState) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho1 [A/m]", "rho2 [A/m]", "weight [1]", "y [1]"])
        for row in zip(quad.rho1, quad.rho2, quad.weights, state.y):
            writer.writerow([f"{v:.17g}" for v in row])
