"""The four experiment commands.  Each takes a validated config dict and an OutputDir."""

from __future__ import annotations

import logging

import numpy as np

from ..convergence import run_convergence
from ..exceptions import ConfigError
from ..fem import run_simulation
from ..preisach import (
    classical_preisach,
    demagnetized_state,
    discretize_triangle,
    dynamic_preisach,
    dynamic_preisach_states,
    split_ties,
    total_weight,
    write_ensemble_csv,
)
from ..relay import (
    RelayConfig,
    Signal,
    ThresholdPair,
    classical_relay,
    dynamic_relay,
    reconstruct_multiplier,
)
from .config import density_from, sim_config_from
from .output import OutputDir

log = logging.getLogger(__name__)


def tag(x: float) -> str:
    return f"{x:g}".replace("+", "")


def _sine(amplitude, offset, frequency, periods, samples_per_period) -> Signal:
    n = int(round(periods * samples_per_period))
    t = np.linspace(0.0, periods / frequency, n + 1)
    return Signal(t, offset + amplitude * np.sin(2.0 * np.pi * frequency * t))


def _config_error(exc: ValueError, path: str = "$") -> ConfigError:
    return ConfigError(str(exc), path=path)


def cmd_relay(cfg: dict, out: OutputDir, threads: int = 1) -> None:
    sig = cfg["signal"]
    try:
        rho = ThresholdPair(*cfg["rho"])
    except ValueError as exc:
        raise _config_error(exc, "$.rho") from None
    xi = cfg["xi"]
    if cfg.get("classical", False) and xi not in (-1.0, 1.0):
        raise ConfigError("the classical relay needs xi in {-1, 1}", path="$.xi")
    for f in sig["frequencies"]:
        signal = _sine(
            sig["amplitude"], sig.get("offset", 0.0), f, sig.get("periods", 1), sig.get("samples_per_period", 5000)
        )
        for k in cfg["k"]:
            trace = dynamic_relay(signal, RelayConfig(rho, k, xi))
            u = signal(trace.times)
            stem = f"relay_f{tag(f)}_k{tag(k)}"
            out.write_csv(f"{stem}_trace.csv", ["t [s]", "u [A/m]", "y [1]"], [trace.times, u, trace.values])
            out.write_csv(f"{stem}_loop.csv", ["u [A/m]", "y [1]"], [u, trace.values])
            if cfg.get("multiplier", False):
                q = reconstruct_multiplier(trace, signal, rho, k)
                out.write_csv(f"{stem}_multiplier.csv", ["t [s]", "q [1/s]"], [q.times, q.values])
        if cfg.get("classical", False):
            trace = classical_relay(signal, rho, int(xi))
            stem = f"relay_f{tag(f)}_classical"
            out.write_csv(f"{stem}_trace.csv", ["t [s]", "u [A/m]", "y [1]"], [trace.times, signal.values, trace.values])
            out.write_csv(f"{stem}_loop.csv", ["u [A/m]", "y [1]"], [signal.values, trace.values])


def loop_signal(source: dict, duration: float | None) -> Signal:
    """Input for the loop command scaled to ``duration`` seconds."""
    if source["type"] == "sine":
        periods = source.get("periods", 1)
        if duration is None:
            duration = periods / source["frequency"]
        f = periods / duration
        return _sine(source["amplitude"], source.get("offset", 0.0), f, periods, source.get("samples_per_period", 2000))
    fr, vals = np.asarray(source["fractions"], float), np.asarray(source["values"], float)
    if fr.size != vals.size:
        raise ConfigError("fractions and values differ in length", path="$.input")
    if fr[0] != 0.0 or fr[-1] != 1.0 or np.any(np.diff(fr) <= 0):
        raise ConfigError("fractions must increase strictly from 0 to 1", path="$.input.fractions")
    if duration is None:
        raise ConfigError("turning-point input needs 'durations'", path="$.durations")
    if "du" in source:
        per = [max(1, int(np.ceil(abs(b - a) / source["du"] - 1e-9))) for a, b in zip(vals[:-1], vals[1:])]
    else:
        per = [source.get("samples_per_segment", 400)] * (fr.size - 1)
    s = np.concatenate([np.linspace(0.0, 1.0, m + 1)[:-1] + i for i, m in enumerate(per)] + [[fr.size - 1.0]])
    t = duration * np.interp(s, np.arange(fr.size), fr)
    return Signal(t, np.interp(s, np.arange(fr.size), vals))


def cmd_loop(cfg: dict, out: OutputDir, threads: int = 1) -> None:
    rho0 = cfg.get("rho0", 300.0)
    n = cfg.get("n_triangle", 50)
    params = density_from(cfg.get("density"))
    density = params if params is not None else (lambda a, b: np.zeros_like(a))
    quad = discretize_triangle(rho0, n, density)
    log.info("%d relays, total weight %.6g", len(quad), total_weight(quad))
    state0 = demagnetized_state(quad)
    fractions = cfg.get("snapshot_fractions", [])
    for d in cfg.get("durations", [None]):
        signal = loop_signal(cfg["input"], d)
        dstem = f"loop_D{tag(signal.duration)}"
        for k in cfg["k"]:
            trace = dynamic_preisach(signal, quad, state0, k)
            out.write_csv(
                f"{dstem}_k{tag(k)}.csv", ["t [s]", "u [A/m]", "W [1]"], [signal.times, signal.values, trace.values]
            )
            if fractions:
                at = np.asarray(fractions) * signal.duration
                for idx, state in zip(np.unique(np.argmin(np.abs(signal.times[:, None] - at), axis=0)),
                                      dynamic_preisach_states(signal, quad, state0, k, at)):
                    name = f"{dstem}_k{tag(k)}_ensemble_t{tag(signal.times[idx])}.csv"
                    write_ensemble_csv(out.adopt(name), quad, state)
        if cfg.get("classical", False):
            split = split_ties(quad)
            trace = classical_preisach(signal, split, demagnetized_state(split, two_state=True))
            out.write_csv(
                f"{dstem}_classical.csv", ["t [s]", "u [A/m]", "W [1]"], [signal.times, signal.values, trace.values]
            )


def _sim_config(cfg: dict):
    try:
        return sim_config_from(cfg)
    except ValueError as exc:
        raise _config_error(exc) from None


def cmd_field(cfg: dict, out: OutputDir, threads: int = 1) -> None:
    config = _sim_config(cfg)
    snaps = cfg.get("snapshots", [0.002, 0.0055, 0.01])
    probes = cfg.get("probes", [[config.L / 2, config.L / 2]])
    for t in snaps:
        if t > config.T:
            raise ConfigError(f"snapshot time {t} beyond T={config.T}", path="$.snapshots")
    result = run_simulation(config, snapshot_times=snaps, probes=probes, threads=threads)
    mesh = result.mesh
    ids = np.arange(mesh.n_nodes)
    for i, (t, u, w) in enumerate(result.snapshots):
        out.write_csv(
            f"field_{i:02d}_t{tag(t)}.csv",
            ["node_id", "x [m]", "y [m]", "u [A/m]", "w [1]"],
            [ids, mesh.nodes[:, 0], mesh.nodes[:, 1], u, w],
        )
    for j in range(result.probe_points.shape[0]):
        out.write_csv(
            f"probe_{j:02d}.csv",
            ["t [s]", "u_probe [A/m]", "w_probe [1]"],
            [result.times, result.probe_u[:, j], result.probe_w[:, j]],
        )
    out.write_csv(
        "solver.csv",
        ["t [s]", "iterations [1]", "residual [1]"],
        [result.times, result.newton_iterations, result.residuals],
    )
    if cfg.get("export_mesh", False):
        mesh.write_text(out.adopt("mesh.txt"))


def cmd_convergence(cfg: dict, out: OutputDir, threads: int = 1) -> None:
    config = _sim_config(cfg)
    levels = cfg.get("levels", [1, 2, 4])
    reference = cfg.get("reference_level", 8)
    if reference <= max(levels):
        raise ConfigError("reference level must exceed every test level", path="$.reference_level")
    report = run_convergence(
        config, mode=cfg.get("mode", "space"), levels=levels, reference_level=reference,
        threads=threads, progress=log.info,
    )
    out.write_json("convergence.json", report.to_dict())
    nan = [float("nan")]
    out.write_csv(
        "convergence.csv",
        ["level", "h [m]", "dt [s]", "error_l2 [%]", "error_h1 [%]", "rate_l2 [1]", "rate_h1 [1]"],
        [np.asarray(levels), report.h, report.dt, report.error_l2, report.error_h1,
         nan + report.rate_l2, nan + report.rate_h1],
    )


COMMANDS = {
    "relay": cmd_relay,
    "loop": cmd_loop,
    "field": cmd_field,
    "convergence": cmd_convergence,
}
