"""Backward-Euler P1 solver for the diffusion equation with dynamic Preisach hysteresis.

Each node carries its own relay ensemble.  A time step solves

    M (u + w(u)) + (dt / sigma) K u = M (u_prev + w_prev)   on interior rows,
    u = g(t)                                                 on the boundary,

where ``w`` at a node is the dynamic Preisach output after the node's relays
have followed the affine input path from ``u_prev`` to ``u`` over ``dt``.
"""

from __future__ import annotations

import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import diags

from ..exceptions import NonConvergenceError
from ..preisach import (
    LorentzianParams,
    TriangleQuadrature,
    demagnetized_state,
    discretize_triangle,
    total_weight,
)
from ..relay import advance_relays
from .assembly import assemble
from .linalg import cg_solve
from .mesh import Mesh, generate_square_mesh

log = logging.getLogger(__name__)

DENSITIES = ("lorentzian", "zero")


@dataclass(frozen=True)
class SimConfig:
    L: float = 0.02
    n: int = 6
    sigma: float = 100.0
    T: float = 0.01
    steps: int = 128
    amplitude: float = 200.0
    frequency: float = 100.0
    rho0: float = 300.0
    n_triangle: int = 20
    density: str = "lorentzian"
    lorentzian: LorentzianParams = LorentzianParams()
    k: float = 10.0
    tol: float = 1e-8
    max_iter: int = 50
    cg_tol: float = 1e-10
    fd_step: float = 1e-6
    fallback_iter: int = 200
    fallback_damping: float = 0.5

    def __post_init__(self) -> None:
        positive = ("L", "sigma", "T", "rho0", "k", "tol", "cg_tol", "fd_step", "fallback_damping")
        for name in positive:
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive, got {value}")
        for name in ("n", "steps", "n_triangle", "max_iter"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.density not in DENSITIES:
            raise ValueError(f"density must be one of {DENSITIES}")

    @property
    def dt(self) -> float:
        return self.T / self.steps

    def drive(self, t: float) -> float:
        return self.amplitude * math.sin(2.0 * math.pi * self.frequency * t)


@dataclass(frozen=True, eq=False)
class SimState:
    t: float
    u: np.ndarray
    w: np.ndarray
    ensembles: np.ndarray  # (n_nodes, n_relays)
    step: int = 0
    newton_iterations: int = 0
    residual: float = 0.0


class Discretization:
    """Mesh, matrices and quadrature shared by every step of one configuration."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.mesh: Mesh = generate_square_mesh(config.L, config.n)
        self.M, self.K, self.A = assemble(self.mesh, config.sigma, config.dt)
        self.interior = self.mesh.interior_nodes
        self.boundary = self.mesh.boundary_nodes
        self.A_II = self.A[self.interior][:, self.interior].tocsr()
        self.A_IB = self.A[self.interior][:, self.boundary].tocsr()
        self.lumped_I = np.asarray(self.M.sum(axis=1)).ravel()[self.interior]
        if config.density == "zero":
            self.quad = discretize_triangle(config.rho0, config.n_triangle, lambda a, b: np.zeros_like(a))
        else:
            self.quad = discretize_triangle(config.rho0, config.n_triangle, config.lorentzian)
        self.total_weight = total_weight(self.quad)

    def memory_bytes(self) -> int:
        return self.mesh.n_nodes * len(self.quad) * 8


@functools.lru_cache(maxsize=8)
def discretization(config: SimConfig) -> Discretization:
    disc = Discretization(config)
    log.info(
        "mesh %d nodes, %d relays per node, ensemble memory %.1f MB",
        disc.mesh.n_nodes,
        len(disc.quad),
        disc.memory_bytes() / 1e6,
    )
    return disc


def _node_update(quad: TriangleQuadrature, y0, u0, u1, dt, k, threads: int):
    """New relay states and outputs for a block of nodes."""

    def work(rows: slice):
        y = advance_relays(y0[rows], u0[rows, None], u1[rows, None], dt, quad.rho1, quad.rho2, k)
        return y, np.add.reduce(y * quad.weights, axis=1)

    n = y0.shape[0]
    if threads <= 1 or n < 2 * threads:
        return work(slice(0, n))
    bounds = np.linspace(0, n, threads + 1).astype(int)
    chunks = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(work, chunks))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def initial_state(config: SimConfig) -> SimState:
    """u = 0 with demagnetized relays at every node."""
    disc = discretization(config)
    n_nodes = disc.mesh.n_nodes
    y0 = np.tile(demagnetized_state(disc.quad).y, (n_nodes, 1))
    w0 = np.add.reduce(y0 * disc.quad.weights, axis=1)
    return SimState(0.0, np.zeros(n_nodes), w0, y0)


def advance_time_step(state: SimState, config: SimConfig, t_next: float, threads: int = 1) -> SimState:
    """One backward-Euler step solved by a diagonal-chord semismooth Newton iteration."""
    disc = discretization(config)
    dt = t_next - state.t
    if not math.isclose(dt, config.dt, rel_tol=1e-9, abs_tol=0.0):
        raise ValueError(f"time step {dt} does not match configured dt {config.dt}")
    quad, k = disc.quad, config.k
    I, B = disc.interior, disc.boundary
    M = disc.M

    u = state.u.copy()
    u[B] = config.drive(t_next)
    w = np.empty_like(u)
    ens = np.empty_like(state.ensembles)
    ens[B], w[B] = _node_update(quad, state.ensembles[B], state.u[B], u[B], dt, k, threads)

    rhs = (M @ (state.u + state.w))[I]
    lift = disc.A_IB @ u[B]
    y0_I, u0_I = state.ensembles[I], state.u[I]

    def residual(u_I):
        u[I] = u_I
        ens_I, w_I = _node_update(quad, y0_I, u0_I, u_I, dt, k, threads)
        w[I] = w_I
        Au, Mw = disc.A_II @ u_I, (M @ w)[I]
        F = Au + lift + Mw - rhs
        # interior and lifting terms cancel at the solution, so scale by each separately
        terms = (Au, lift, Mw, rhs)
        scale = sum(float(np.linalg.norm(x)) for x in terms)
        rel = 0.0 if scale == 0.0 else float(np.linalg.norm(F) / scale)
        return F, rel, ens_I, w_I

    u_I = state.u[I].copy()
    F, rel, ens_I, w_I = residual(u_I)
    iterations = 0
    while rel > config.tol and iterations < config.max_iter:
        eps = config.fd_step * np.maximum(1.0, np.abs(u_I))
        _, w_shift = _node_update(quad, y0_I, u0_I, u_I + eps, dt, k, threads)
        slope = np.maximum((w_shift - w_I) / eps, 0.0)
        J = (disc.A_II + diags(disc.lumped_I * slope)).tocsr()
        u_I = u_I + cg_solve(J, -F, tol=config.cg_tol)
        F, rel, ens_I, w_I = residual(u_I)
        iterations += 1

    if rel > config.tol:
        log.warning("Newton stalled at residual %.3e; trying damped fixed point", rel)
        for _ in range(config.fallback_iter):
            # A_II u_I = rhs - A_IB g - (M w)_I with w frozen at the current iterate
            target = u_I + cg_solve(disc.A_II, -F, tol=config.cg_tol)
            u_I = u_I + config.fallback_damping * (target - u_I)
            F, rel, ens_I, w_I = residual(u_I)
            iterations += 1
            if rel <= config.tol:
                break
        else:
            raise NonConvergenceError(
                f"nonlinear solve failed at t={t_next:.6g} (residual {rel:.3e})",
                residual=rel,
                step=state.step + 1,
            )

    u[I] = u_I
    w[I] = w_I
    ens[I] = ens_I
    return SimState(t_next, u, w, ens, state.step + 1, iterations, rel)


@dataclass
class SimResult:
    config: SimConfig
    mesh: Mesh
    total_weight: float
    times: np.ndarray
    probe_points: np.ndarray
    probe_u: np.ndarray  # (steps + 1, n_probes)
    probe_w: np.ndarray
    snapshots: list = field(default_factory=list)  # (t, u, w) triples
    newton_iterations: np.ndarray | None = None
    residuals: np.ndarray | None = None
    history: np.ndarray | None = None  # (steps + 1, n_nodes) u fields
    final_state: SimState | None = None


def run_simulation(
    config: SimConfig,
    snapshot_times=(),
    probes=(),
    threads: int = 1,
    keep_history: bool = False,
    state: SimState | None = None,
) -> SimResult:
    """March ``config.steps`` backward-Euler steps from the demagnetized state."""
    disc = discretization(config)
    state = initial_state(config) if state is None else state
    times = state.t + config.dt * np.arange(config.steps + 1)
    probe_points = np.asarray(probes, dtype=float).reshape(-1, 2)
    P = disc.mesh.interpolation_matrix(probe_points) if len(probe_points) else None
    wanted = {}
    for s in snapshot_times:
        wanted.setdefault(int(np.argmin(np.abs(times - s))), s)

    probe_u = np.zeros((times.size, len(probe_points)))
    probe_w = np.zeros_like(probe_u)
    history = np.empty((times.size, disc.mesh.n_nodes)) if keep_history else None
    iters = np.zeros(times.size, dtype=int)
    residuals = np.zeros(times.size)
    snapshots = []

    def record(i: int, st: SimState) -> None:
        if P is not None:
            probe_u[i] = P @ st.u
            probe_w[i] = P @ st.w
        if keep_history:
            history[i] = st.u
        if i in wanted:
            snapshots.append((float(times[i]), st.u.copy(), st.w.copy()))
        iters[i] = st.newton_iterations
        residuals[i] = st.residual

    record(0, state)
    for i in range(1, times.size):
        try:
            state = advance_time_step(state, config, float(times[i]), threads=threads)
        except NonConvergenceError as exc:
            exc.step = i
            raise
        record(i, state)

    return SimResult(
        config=config,
        mesh=disc.mesh,
        total_weight=disc.total_weight,
        times=times,
        probe_points=probe_points,
        probe_u=probe_u,
        probe_w=probe_w,
        snapshots=snapshots,
        newton_iterations=iters,
        residuals=residuals,
        history=history,
        final_state=state,
    )


def with_overrides(config: SimConfig, **kwargs) -> SimConfig:
    return replace(config, **kwargs)
