import math
from dataclasses import replace

import numpy as np
import pytest

from ostrovsky.errors import ConfigError, GridMismatch
from ostrovsky.evolution import SolverConfig
from ostrovsky.experiments import (ExperimentConfig, MANUFACTURED, decaying_poisson,
                                   delta_sweep, load_config, mms_run, parse_config,
                                   record_every_sensitivity, refinement_study,
                                   spatial_reduction_holds, stability_experiment)
from ostrovsky.grid import Field, derivative, make_grid
from ostrovsky.nonlocal_p import solve_p

SAMPLE = """
# twin run
grid.L = 10
grid.N = 128
solver.gamma = 0.25
solver.delta = 0.2, 0.1, 0.05   # first entry is the run value
solver.dt = auto
solver.t_end = 1.5
solver.dealias = false
flux.name = cubic
flux.range = -3, 3
profile.name = gaussian_derivative
profile.width = 1.5
perturbation.amplitude = 1e-4
perturbation.mode = 3
output.dir = somewhere
seed = 12
"""


def test_parse_config_sample():
    cfg = parse_config(SAMPLE)
    assert cfg.L == 10.0 and cfg.N == 128
    assert cfg.solver.gamma == 0.25 and cfg.solver.delta == 0.2
    assert cfg.deltas == (0.2, 0.1, 0.05)
    assert cfg.solver.dealias is False and cfg.solver.t_end == 1.5
    assert cfg.flux_model().name == "cubic" and cfg.flux_range == (-3.0, 3.0)
    assert cfg.profile_params == {"width": 1.5}
    assert cfg.perturbation == {"shape": "sine", "amplitude": 1e-4, "mode": 3}
    assert cfg.out_dir == "somewhere" and cfg.seed == 12


@pytest.mark.parametrize("text,line", [
    ("grid.N = 64\nsolver.gama = 1", 2),
    ("grid.N = 63", 1),
    ("\n\nsolver.delta = 1.5", 3),
    ("solver.dt = soon", 1),
    ("flux.name = quartic", 1),
    ("profile.name = sine\nprofile.wobble = 3", 1),
    ("flux.range = 1", 1),
    ("no equals sign", 1),
])
def test_parse_errors_name_the_line(text, line):
    with pytest.raises(ConfigError, match=rf"^cfg:{line}: "):
        parse_config(text, "cfg")


def test_load_config(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text("grid.N = 64\n")
    assert load_config(p).N == 64
    with pytest.raises(FileNotFoundError, match="missing.cfg"):
        load_config(tmp_path / "missing.cfg")


def small_config(**solver):
    cfg = ExperimentConfig(L=math.pi, N=64)
    cfg.solver = replace(SolverConfig(t_end=1.0), **solver)
    return cfg


def test_identical_twins_are_bit_identical():
    cfg = small_config()
    u0 = cfg.initial_data()
    rep = stability_experiment(cfg, u0, u0)
    assert np.all(rep.omega_l2 == 0.0) and rep.c_fit == 0.0 and rep.verdict.passed


def test_perturbed_twins():
    cfg = small_config()
    u0 = cfg.initial_data()
    rep = stability_experiment(cfg, u0, cfg.perturbed(u0))
    assert rep.verdict.passed and rep.c_fit <= rep.c_bound
    assert rep.omega_linearity <= 1e-12
    assert np.all(np.isfinite(rep.omega_l2))


def test_linear_regime():
    cfg = small_config()
    g = cfg.grid()
    u0 = Field(g, 1e-8 * np.sin(g.x))
    v0 = Field(g, 1e-8 * np.sin(g.x) + 1e-9 * np.sin(2 * g.x))
    rep = stability_experiment(cfg, u0, v0)
    assert rep.verdict.passed
    assert rep.c_bound - rep.bound_terms["nonlocal"] < 1e-7
    assert rep.omega_l2[-1] < rep.omega_l2[0]


def test_stability_grid_mismatch():
    cfg = small_config()
    with pytest.raises(GridMismatch):
        stability_experiment(cfg, Field.zeros(make_grid(1.0, 64)), Field.zeros(make_grid(2.0, 64)))


def test_delta_sweep_trivial_and_ordering():
    cfg = small_config(dt=0.01)
    u0 = cfg.initial_data()
    table = delta_sweep(cfg, u0, [0.0])
    assert table.errors.tolist() == [0.0]
    with pytest.raises(ValueError):
        delta_sweep(cfg, u0, [0.05, 0.1])


def test_delta_sweep_parallel_matches_serial():
    cfg = small_config()
    u0 = cfg.initial_data()
    a = delta_sweep(cfg, u0, [0.2, 0.1], workers=1)
    b = delta_sweep(cfg, u0, [0.2, 0.1], workers=3)
    np.testing.assert_array_equal(a.errors, b.errors)
    assert np.all(np.diff(a.errors) < 0)


def test_refinement_band_limited_is_spectrally_exact():
    cfg = small_config()
    res = refinement_study(cfg, [64, 128, 256], [0.02, 0.01])
    assert np.all(res.spatial_errors < 1e-13)
    with pytest.raises(ValueError):
        refinement_study(cfg, [32, 96], [0.02, 0.01])


def test_refinement_temporal_order_on_gaussian_derivative():
    cfg = ExperimentConfig(L=10.0, N=256, profile="gaussian_derivative")
    cfg.solver = SolverConfig(t_end=2.0)
    res = refinement_study(cfg, [128, 256], [0.04, 0.02, 0.01, 0.005, 0.0025, 0.00125])
    assert np.all(np.abs(res.temporal_orders - 4.0) <= 0.3), res.temporal_orders


def test_record_every_sensitivity_validation():
    cfg = small_config(dt=0.01)
    with pytest.raises(ValueError):
        record_every_sensitivity(cfg.initial_data(), cfg.solver, cfg.flux_model(), 3)
    changes = record_every_sensitivity(cfg.initial_data(), cfg.solver, cfg.flux_model())
    assert set(changes) == {"weighted_ux_l2sq", "uxx_l2sq", "uxxx_l2sq"}


@pytest.mark.parametrize("name", sorted(MANUFACTURED))
def test_manufactured_derivatives_match_spectral(name):
    g = make_grid(math.pi, 256)
    ms = MANUFACTURED[name](g.L)
    u = Field(g, ms.u(0.4, g.x))
    np.testing.assert_allclose(derivative(u, 1).values, ms.u_x(0.4, g.x), atol=1e-11)
    np.testing.assert_allclose(derivative(u, 2).values, ms.u_xx(0.4, g.x), atol=1e-10)
    eps = 1e-6
    fd = (ms.u(0.4 + eps, g.x) - ms.u(0.4 - eps, g.x)) / (2 * eps)
    np.testing.assert_allclose(ms.u_t(0.4, g.x), fd, atol=1e-8)
    assert abs(np.mean(ms.u(0.4, g.x))) < 1e-15


def test_steady_mms_is_recovered_to_round_off():
    cfg = small_config()
    res = mms_run(cfg, "steady_sine", [32, 64], [0.1, 0.05])
    assert np.all(res.spatial_errors < 1e-12)
    assert np.all(res.temporal_errors < 1e-12)


def test_decaying_sine_mms_orders():
    cfg = small_config()
    res = mms_run(cfg, "decaying_sine", [64, 128], [0.2, 0.1, 0.05, 0.025])
    assert spatial_reduction_holds(res)
    ratios = res.temporal_errors[:-1] / res.temporal_errors[1:]
    assert np.all(np.abs(np.log2(ratios) - 4) <= 0.3)


def test_poisson_mms_shows_spectral_decay():
    cfg = small_config()
    res = mms_run(cfg, decaying_poisson(cfg.L, 0.5, 0.5), [32, 64, 128], [0.025])
    assert np.all(res.spatial_reduction() > 10)
    assert spatial_reduction_holds(res)


def test_spatial_rule_rejects_stalled_errors():
    from ostrovsky.experiments import MMSResult
    stalled = MMSResult("x", (64, 128), (0.1,), np.array([1e-6, 5e-7]), 1e-12,
                        np.array([1e-6]), np.array([]), float("nan"))
    assert not spatial_reduction_holds(stalled)
