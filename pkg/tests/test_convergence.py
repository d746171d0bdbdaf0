import numpy as np
import pytest

from hyster.convergence import _rates, _time_interpolation, relative_errors, run_convergence, space_time_norms
from hyster.fem import SimConfig, generate_square_mesh, run_simulation


def test_self_comparison_is_zero():
    cfg = SimConfig(n=4, steps=16, n_triangle=6)
    run = run_simulation(cfg, keep_history=True)
    e_l2, e_h1 = relative_errors(run.mesh, run.times, run.history, run.mesh, run.times, run.history)
    assert e_l2 == 0.0 and e_h1 == 0.0


def test_norms_of_linear_field():
    # u = x on [0,1]^2, constant in time over [0, 2]: |u|_L2^2 = 1/3, |grad u|^2 = 1
    mesh = generate_square_mesh(1.0, 8)
    times = np.array([0.0, 1.0, 2.0])
    history = np.tile(mesh.nodes[:, 0], (3, 1))
    l2, h1 = space_time_norms(mesh, times, history)
    assert h1 == pytest.approx(np.sqrt(2.0), rel=1e-12)
    assert l2 == pytest.approx(np.sqrt(2.0 / 3.0), rel=1e-2)


def test_time_interpolation_is_linear():
    coarse = np.array([0.0, 1.0, 2.0])
    fine = np.linspace(0.0, 2.0, 9)
    T = _time_interpolation(coarse, fine)
    np.testing.assert_allclose(T @ (3.0 * coarse + 1.0), 3.0 * fine + 1.0, atol=1e-14)


def test_rates_formula():
    pairs, fitted = _rates([1.0, 0.5, 0.25], [4.0, 1.0, 0.25])
    np.testing.assert_allclose(pairs, [2.0, 2.0])
    assert fitted == pytest.approx(2.0)


def test_reference_must_be_finer():
    with pytest.raises(ValueError):
        run_convergence(SimConfig(n=2, steps=2), levels=(1, 2), reference_level=2)
    with pytest.raises(ValueError):
        run_convergence(SimConfig(n=2, steps=2), mode="both")


def test_temporal_rate_linear_regime():
    base = SimConfig(n=6, steps=16, density="zero", n_triangle=1)
    report = run_convergence(base, mode="time", levels=(1, 2, 4), reference_level=32)
    assert 0.8 <= report.fitted_rate_l2 <= 1.2
    assert all(e > 0 for e in report.error_l2 + report.error_h1)
    assert report.h == [0.02 / 6] * 3
    assert report.dt == pytest.approx([0.01 / 16, 0.01 / 32, 0.01 / 64])
    d = report.to_dict()
    assert set(d) >= {"h", "dt", "error_l2", "error_h1", "rate_l2", "rate_h1"}
