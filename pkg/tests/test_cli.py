import csv
import json

import numpy as np
import pytest

from hyster.cli.config import PRESETS, SCHEMAS, deep_merge, resolve
from hyster.cli.main import main
from hyster.exceptions import ConfigError


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def manifest_of(out):
    return json.loads((out / "manifest.json").read_text())


def test_every_preset_validates():
    for command, presets in PRESETS.items():
        for name in presets:
            assert resolve(command, preset=name)


def test_deep_merge_overrides_leaves():
    merged = deep_merge({"a": {"b": 1, "c": 2}, "d": 3}, {"a": {"c": 5}})
    assert merged == {"a": {"b": 1, "c": 5}, "d": 3}


def test_field_presets_differ_only_in_k():
    a, b = PRESETS["field"]["sec5-k1000"], PRESETS["field"]["sec5-k1"]
    assert a["preisach"]["k"] == 1000.0 and b["preisach"]["k"] == 1.0
    assert deep_merge(a, {"preisach": {"k": 1.0}}) == b


def test_fig_presets():
    top = PRESETS["relay"]["fig2-top"]
    assert top["rho"] == [50.0, 100.0] and top["xi"] == -1.0 and top["k"] == [1.0, 50.0, 1e8]
    assert top["signal"]["frequencies"] == [20.0]
    assert PRESETS["relay"]["fig3"]["k"] == [50.0]
    assert PRESETS["relay"]["fig3"]["signal"]["frequencies"] == [50.0, 500.0, 5000.0]
    assert PRESETS["loop"]["fig7-left"]["k"] == [25.0, 200.0, 1e8]


def test_unknown_key_is_rejected_with_path(tmp_path):
    cfg = write_config(tmp_path, {"signal": {"amplitude": 1.0, "frequencies": [1.0], "bogus": 1}})
    with pytest.raises(ConfigError) as info:
        resolve("relay", cfg, "fig2-top")
    assert info.value.path == "$.signal"
    assert "bogus" in str(info.value)


def test_schemas_forbid_additional_properties():
    for schema in SCHEMAS.values():
        assert schema["additionalProperties"] is False


def test_empty_k_list_writes_nothing(tmp_path, capsys):
    cfg = write_config(tmp_path, {"k": []})
    out = tmp_path / "out"
    assert main(["relay", "--preset", "fig2-top", "--config", cfg, "--out", str(out)]) == 2
    assert not out.exists()
    assert "$.k" in capsys.readouterr().err


def test_unknown_preset_is_config_error(tmp_path):
    assert main(["field", "--preset", "nope", "--out", str(tmp_path / "o")]) == 2


def test_invalid_json_is_config_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["relay", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_invalid_threshold_order_is_config_error(tmp_path):
    cfg = write_config(tmp_path, {"rho": [2.0, 1.0]})
    assert main(["relay", "--preset", "fig2-top", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["relay", "--preset", "fig2-top", "--out", str(blocker / "sub")]) == 4


def test_nonconvergence_exit_code(tmp_path):
    cfg = write_config(
        tmp_path,
        {"n": 3, "steps": 4, "preisach": {"n_triangle": 5, "k": 1e6},
         "solver": {"max_iter": 1, "fallback_iter": 0, "tol": 1e-15}, "snapshots": []},
    )
    assert main(["field", "--preset", "sec51", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_relay_command_outputs(tmp_path):
    out = tmp_path / "relay"
    cfg = write_config(tmp_path, {"signal": {"samples_per_period": 400}, "multiplier": True})
    assert main(["relay", "--preset", "fig2-top", "--config", cfg, "--out", str(out)]) == 0
    m = manifest_of(out)
    assert m["command"] == "relay"
    assert sorted(m["outputs"]) == sorted(p.name for p in out.iterdir() if p.name != "manifest.json")
    assert len(m["inputs"]) == 1 and len(next(iter(m["inputs"].values()))) == 64
    header, data = read_csv(out / "relay_f20_k50_trace.csv")
    assert header == ["t [s]", "u [A/m]", "y [1]"]
    assert np.all(np.abs(data[:, 2]) <= 1.0)
    assert (out / "relay_f20_k1e08_loop.csv").exists()
    assert (out / "relay_f20_classical_trace.csv").exists()
    header, _ = read_csv(out / "relay_f20_k1_multiplier.csv")
    assert header == ["t [s]", "q [1/s]"]


def test_csv_values_use_full_precision(tmp_path):
    out = tmp_path / "relay"
    cfg = write_config(tmp_path, {"signal": {"samples_per_period": 50}})
    main(["relay", "--preset", "fig3", "--config", cfg, "--out", str(out)])
    line = (out / "relay_f50_k50_trace.csv").read_text().splitlines()[2]
    assert float(line.split(",")[0]) == 1.0 / 50 / 50
    assert line.split(",")[0] == f"{1.0 / 50 / 50:.17g}"


def test_loop_zero_density(tmp_path):
    out = tmp_path / "loop"
    cfg = write_config(tmp_path, {"density": {"type": "zero"}, "n_triangle": 10, "classical": False,
                                  "snapshot_fractions": [0.5]})
    assert main(["loop", "--preset", "fig7-left", "--config", cfg, "--out", str(out)]) == 0
    header, data = read_csv(out / "loop_D0.0045_k25.csv")
    assert header == ["t [s]", "u [A/m]", "W [1]"]
    assert np.all(data[:, 2] == 0.0)
    snaps = [p.name for p in out.glob("*ensemble*")]
    assert len(snaps) == 3
    header, _ = read_csv(out / snaps[0])
    assert header == ["rho1 [A/m]", "rho2 [A/m]", "weight [1]", "y [1]"]


def test_loop_large_k_matches_classical(tmp_path):
    out = tmp_path / "loop"
    assert main(["loop", "--preset", "fig7-left", "--out", str(out)]) == 0
    _, dyn = read_csv(out / "loop_D0.0045_k1e08.csv")
    _, cl = read_csv(out / "loop_D0.0045_classical.csv")
    total = 1.0577  # n=100 total weight, rounded up
    assert np.max(np.abs(dyn[:, 2] - cl[:, 2])) <= 0.01 * total


def test_loop_sine_input(tmp_path):
    out = tmp_path / "loop"
    cfg = {"input": {"type": "sine", "amplitude": 200.0, "frequency": 1.0, "samples_per_period": 200},
           "k": [10.0], "n_triangle": 8}
    assert main(["loop", "--config", write_config(tmp_path, cfg), "--out", str(out)]) == 0
    _, data = read_csv(out / "loop_D1_k10.csv")
    assert data.shape == (201, 3)


def test_field_zero_drive(tmp_path):
    out = tmp_path / "field"
    cfg = write_config(tmp_path, {"drive": {"amplitude": 0.0}, "n": 4, "steps": 16, "preisach": {"n_triangle": 6},
                                  "export_mesh": True})
    assert main(["field", "--preset", "sec51", "--config", cfg, "--out", str(out)]) == 0
    snaps = sorted(out.glob("field_*.csv"))
    assert len(snaps) == 3
    for path in snaps:
        header, data = read_csv(path)
        assert header == ["node_id", "x [m]", "y [m]", "u [A/m]", "w [1]"]
        assert np.all(data[:, 3] == 0.0) and np.all(np.abs(data[:, 4]) <= 1e-15)
    header, _ = read_csv(out / "probe_00.csv")
    assert header == ["t [s]", "u_probe [A/m]", "w_probe [1]"]
    m = manifest_of(out)
    assert sorted(m["outputs"]) == sorted(p.name for p in out.iterdir() if p.name != "manifest.json")
    assert "mesh.txt" in m["outputs"]


def test_field_snapshot_beyond_horizon(tmp_path):
    cfg = write_config(tmp_path, {"snapshots": [0.5]})
    assert main(["field", "--preset", "sec51", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_field_threads_bitwise_identical(tmp_path):
    cfg = write_config(tmp_path, {"n": 5, "steps": 24, "preisach": {"n_triangle": 10, "k": 1000.0}})
    runs = []
    for threads in ("1", "4"):
        out = tmp_path / f"t{threads}"
        assert main(["field", "--preset", "sec51", "--config", cfg, "--out", str(out), "--threads", threads]) == 0
        runs.append({p.name: p.read_bytes() for p in out.glob("*.csv")})
    assert runs[0] == runs[1]


def test_convergence_command(tmp_path):
    out = tmp_path / "conv"
    cfg = write_config(tmp_path, {"levels": [1, 2], "reference_level": 4, "steps": 8})
    assert main(["convergence", "--preset", "sec51-time", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "convergence.json").read_text())
    assert len(report["error_l2"]) == 2 and len(report["rate_l2"]) == 1
    header, data = read_csv(out / "convergence.csv")
    assert header[0] == "level" and data.shape == (2, 7)


def test_convergence_refuses_coarse_reference(tmp_path):
    cfg = write_config(tmp_path, {"levels": [1, 2, 4], "reference_level": 4})
    assert main(["convergence", "--preset", "sec51-time", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
