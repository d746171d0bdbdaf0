"""Self-convergence study of the field solver against a fine reference run."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.sparse import csr_matrix

from .fem import SimConfig, assemble, run_simulation
from .fem.mesh import Mesh


@dataclass
class ConvergenceReport:
    mode: str
    h: list[float]
    dt: list[float]
    error_l2: list[float]  # percent, discrete L2(0,T;L2)
    error_h1: list[float]  # percent, discrete L2(0,T;H1-seminorm)
    rate_l2: list[float]  # per consecutive pair
    rate_h1: list[float]
    fitted_rate_l2: float
    fitted_rate_h1: float
    reference_h: float
    reference_dt: float

    def to_dict(self) -> dict:
        return asdict(self)


def _time_interpolation(coarse_times: np.ndarray, ref_times: np.ndarray) -> csr_matrix:
    """Matrix mapping a coarse time history onto ``ref_times`` (piecewise linear)."""
    idx = np.clip(np.searchsorted(coarse_times, ref_times, side="right") - 1, 0, coarse_times.size - 2)
    if coarse_times.size == 1:
        return csr_matrix(np.ones((ref_times.size, 1)))
    t0, t1 = coarse_times[idx], coarse_times[idx + 1]
    theta = np.clip((ref_times - t0) / (t1 - t0), 0.0, 1.0)
    rows = np.repeat(np.arange(ref_times.size), 2)
    cols = np.column_stack([idx, idx + 1]).ravel()
    vals = np.column_stack([1.0 - theta, theta]).ravel()
    return csr_matrix((vals, (rows, cols)), shape=(ref_times.size, coarse_times.size))


def space_time_norms(mesh: Mesh, times: np.ndarray, history: np.ndarray) -> tuple[float, float]:
    """Discrete L2(0,T;L2) norm and L2(0,T;H1-seminorm) of a nodal history (trapezoid in time)."""
    M, K, _ = assemble(mesh, 1.0, 1.0)
    l2 = np.einsum("ti,ti->t", history, (M @ history.T).T)
    h1 = np.einsum("ti,ti->t", history, (K @ history.T).T)
    return (
        float(np.sqrt(np.trapezoid(np.maximum(l2, 0.0), times))),
        float(np.sqrt(np.trapezoid(np.maximum(h1, 0.0), times))),
    )


def relative_errors(
    mesh: Mesh,
    times: np.ndarray,
    history: np.ndarray,
    ref_mesh: Mesh,
    ref_times: np.ndarray,
    ref_history: np.ndarray,
) -> tuple[float, float]:
    """Percentage errors of a run against the reference, on the reference grids."""
    P = mesh.interpolation_matrix(ref_mesh.nodes)
    Tm = _time_interpolation(times, ref_times)
    mapped = Tm @ (P @ history.T).T
    err_l2, err_h1 = space_time_norms(ref_mesh, ref_times, mapped - ref_history)
    ref_l2, ref_h1 = space_time_norms(ref_mesh, ref_times, ref_history)
    return (
        100.0 * err_l2 / ref_l2 if ref_l2 > 0 else 0.0,
        100.0 * err_h1 / ref_h1 if ref_h1 > 0 else 0.0,
    )


def _rates(sizes, errors) -> tuple[list[float], float]:
    sizes = np.asarray(sizes, dtype=float)
    errors = np.asarray(errors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        pairs = np.log(errors[:-1] / errors[1:]) / np.log(sizes[:-1] / sizes[1:])
    fitted = float(np.polyfit(np.log(sizes), np.log(errors), 1)[0]) if sizes.size > 1 else float("nan")
    return [float(r) for r in pairs], fitted


def run_convergence(
    base: SimConfig,
    mode: str = "space",
    levels=(1, 2, 4),
    reference_level: int = 8,
    threads: int = 1,
    progress=None,
) -> ConvergenceReport:
    """Refine the mesh (``mode='space'``) or the time step (``mode='time'``).

    Space mode uses ``base.n * level`` cells per side and a fixed ``base.steps``;
    time mode uses ``base.steps * level`` steps on the fixed mesh ``base.n``.
    """
    if mode not in ("space", "time"):
        raise ValueError(f"mode must be 'space' or 'time', got {mode!r}")
    if reference_level <= max(levels):
        raise ValueError("reference level must be finer than every test level")

    def config_for(level: int) -> SimConfig:
        if mode == "space":
            return replace(base, n=base.n * level)
        return replace(base, steps=base.steps * level)

    ref_cfg = config_for(reference_level)
    if progress:
        progress(f"reference run n={ref_cfg.n} steps={ref_cfg.steps}")
    ref = run_simulation(ref_cfg, keep_history=True, threads=threads)

    err_l2, err_h1, hs, dts = [], [], [], []
    for level in levels:
        cfg = config_for(level)
        if progress:
            progress(f"test run n={cfg.n} steps={cfg.steps}")
        run = run_simulation(cfg, keep_history=True, threads=threads)
        e_l2, e_h1 = relative_errors(run.mesh, run.times, run.history, ref.mesh, ref.times, ref.history)
        err_l2.append(e_l2)
        err_h1.append(e_h1)
        hs.append(cfg.L / cfg.n)
        dts.append(cfg.dt)

    sizes = hs if mode == "space" else dts
    rate_l2, fit_l2 = _rates(sizes, err_l2)
    rate_h1, fit_h1 = _rates(sizes, err_h1)
    return ConvergenceReport(
        mode=mode,
        h=hs,
        dt=dts,
        error_l2=err_l2,
        error_h1=err_h1,
        rate_l2=rate_l2,
        rate_h1=rate_h1,
        fitted_rate_l2=fit_l2,
        fitted_rate_h1=fit_h1,
        reference_h=ref_cfg.L / ref_cfg.n,
        reference_dt=ref_cfg.dt,
    )
