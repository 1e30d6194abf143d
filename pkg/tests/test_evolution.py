import json
import math
import os
import subprocess
import sys

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ostrovsky.errors import BlowUp, NonZeroMean
from ostrovsky.evolution import (ETDRK4, SimState, Simulation, SolverConfig, cfl_dt,
                                 linear_symbol, phi_functions, prepare_initial_data,
                                 profile_values, random_band_limited, run, step, time_grid)
from ostrovsky.flux import FluxModel, burgers_flux
from ostrovsky.grid import Field, l2_norm, linf_norm, make_grid, mean
from ostrovsky.nonlocal_p import solve_p
from conftest import random_field

ZERO_FLUX = FluxModel("zero", lambda u: np.zeros_like(u), lambda u: np.zeros_like(u),
                      lambda u: np.zeros_like(u), 0.0)


@pytest.mark.parametrize("kw", [dict(gamma=0.0), dict(delta=1.0), dict(delta=-0.1),
                                dict(t_end=0.0), dict(cfl_safety=1.5), dict(dt=-1.0),
                                dict(dt="fast"), dict(record_every=0),
                                dict(blowup_threshold=0.0), dict(dt_max=0.0)])
def test_solver_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_linear_symbol():
    assert linear_symbol(0.0, 0.5, 0.1) == 0
    assert linear_symbol(2.0, 0.5, 0.1) == pytest.approx(-4 + 0.5 / (0.4 + 2j))
    assert linear_symbol(2.0, 0.5, 0.0) == pytest.approx(-4 - 0.25j)


@pytest.mark.parametrize("z", [1e-9, -0.3 + 0.2j, 0.999, -1.001, 5.0, -40.0 + 7j, -800.0])
def test_phi_functions_against_high_precision(z):
    mpmath.mp.dps = 40
    zm = mpmath.mpc(z)
    em1 = mpmath.expm1(zm)
    expected = [em1 / zm, (em1 - zm) / zm ** 2, (em1 - zm - zm ** 2 / 2) / zm ** 3]
    got = phi_functions(np.array([z]))
    for g, e in zip(got, expected):
        assert abs(g[0] - complex(e)) <= 1e-14 * max(1.0, abs(complex(e)))


def test_linear_modes_are_propagated_exactly():
    # without flux every Fourier mode evolves as exp(L(k) t)
    g = make_grid(math.pi, 32)
    gamma, delta, T = 0.5, 0.1, 1.3
    x = g.x
    u0 = Field(g, np.sin(x) + 0.3 * np.cos(4 * x))
    cfg = SolverConfig(gamma=gamma, delta=delta, dt=0.37, t_end=T)
    final, _ = run(u0, cfg, ZERO_FLUX)
    lam1 = -1 + gamma / (delta + 1j)
    lam4 = -16 + gamma / (16 * delta + 4j)
    expected = (np.real(-1j * np.exp(lam1 * T) * np.exp(1j * x))
                + 0.3 * np.real(np.exp(lam4 * T) * np.exp(4j * x)))
    np.testing.assert_allclose(final.u.values, expected, atol=1e-14)


def test_nonautonomous_forcing_is_integrated_to_fourth_order():
    # u' = L u + cos(t) e^{ix} has a closed form; order must be 4
    g = make_grid(math.pi, 16)
    lam = linear_symbol(1.0, 0.5, 0.1)
    T = 1.0

    def forcing(t):
        out = np.zeros(g.N // 2 + 1, complex)
        out[1] = g.N / 2 * math.cos(t)
        return out

    # a(t) with a' = lam a + cos t, a(0) = 0
    a_T = (np.exp(lam * T) * lam - lam * math.cos(T) + math.sin(T)) / (lam ** 2 + 1)
    errors = []
    for dt in (0.2, 0.1, 0.05):
        scheme = ETDRK4(g, 0.5, 0.1, ZERO_FLUX, True, forcing)
        v = np.zeros(g.N // 2 + 1, complex)
        t = 0.0
        for _ in range(round(T / dt)):
            v = scheme.advance(v, t, dt)
            t += dt
        errors.append(abs(v[1] / (g.N / 2) - a_T))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders > 3.7), orders


def test_profiles_and_initial_data():
    g = make_grid(10.0, 128)
    for name in ("sine", "sine_packet", "gaussian", "gaussian_derivative", "bump"):
        u0, p0 = prepare_initial_data(name, g)
        assert abs(mean(u0)) < 1e-15
        np.testing.assert_allclose(p0.values, solve_p(u0, 0.0).values)
    fine = make_grid(10.0, 4096)
    assert np.max(np.abs(profile_values("gaussian_derivative", fine, amplitude=2.0))) == \
        pytest.approx(2.0, rel=1e-5)
    with pytest.raises(ValueError):
        profile_values("nope", g)


def test_random_profile_is_reproducible_and_band_limited():
    g = make_grid(math.pi, 64)
    a = random_band_limited(g, 42, kmax=5, amplitude=0.7)
    np.testing.assert_array_equal(a, random_band_limited(g, 42, kmax=5, amplitude=0.7))
    assert np.max(np.abs(a)) == pytest.approx(0.7)
    c = np.fft.rfft(a)
    assert np.all(np.abs(c[6:]) < 1e-12 * g.N) and abs(c[0]) < 1e-12 * g.N
    with pytest.raises(ValueError):
        random_band_limited(g, 0, kmax=32)


def test_cfl_dt():
    g = make_grid(math.pi, 64)
    u = Field(g, 2.0 * np.sin(g.x))
    assert cfl_dt(u, g, burgers_flux(), 0.5) == pytest.approx(0.5 * g.dx / 2.0, rel=1e-3)
    assert cfl_dt(Field.zeros(g), g, burgers_flux(), 0.5, dt_max=0.05) == 0.05


def test_time_grid_lands_on_t_end():
    assert time_grid(SolverConfig()) is None
    n, h = time_grid(SolverConfig(dt=0.3, t_end=1.0))
    assert n == 4 and h == 0.25
    final, report = run(Field(make_grid(math.pi, 32), np.sin(make_grid(math.pi, 32).x)),
                        SolverConfig(dt=0.3, t_end=1.0), burgers_flux())
    assert final.t == 1.0 and final.step_index == 4
    assert report.time[-1] == 1.0


def test_auto_dt_ends_exactly_and_records_final_state():
    g = make_grid(math.pi, 64)
    final, report = run(Field(g, np.sin(g.x)), SolverConfig(t_end=0.5, record_every=7),
                        burgers_flux())
    assert final.t == 0.5 and report.time[-1] == 0.5
    assert report.time[0] == 0.0


def test_nonzero_mean_rejected():
    g = make_grid(math.pi, 32)
    with pytest.raises(NonZeroMean):
        Simulation(Field(g, np.ones(g.N)), SolverConfig(), burgers_flux())


def test_blowup_reports_time():
    g = make_grid(math.pi, 32)
    with pytest.raises(BlowUp) as info:
        Simulation(Field(g, np.sin(g.x)), SolverConfig(blowup_threshold=0.5), burgers_flux())
    assert info.value.time == 0.0
    cubic = FluxModel("steep", lambda u: u ** 2 * 50, lambda u: 100 * u,
                      lambda u: 100 + 0 * u, 100.0)
    with pytest.raises(BlowUp) as info:
        run(Field(g, 3 * np.sin(g.x)), SolverConfig(dt=0.5, t_end=5.0, dealias=False), cubic)
    assert info.value.time > 0.0


def test_step_matches_simulation():
    g = make_grid(math.pi, 64)
    u0 = Field(g, np.sin(g.x))
    cfg = SolverConfig(dt=0.01, t_end=0.02)
    s = SimState(0.0, u0, solve_p(u0, cfg.delta), 0)
    s = step(step(s, cfg, burgers_flux(), 0.01), cfg, burgers_flux(), 0.01)
    final, _ = run(u0, cfg, burgers_flux())
    np.testing.assert_allclose(s.u.values, final.u.values, atol=1e-14)
    assert s.step_index == 2


def test_determinism():
    g = make_grid(math.pi, 64)
    u0 = random_field(g, 3)
    a, _ = run(u0, SolverConfig(t_end=0.5), burgers_flux())
    b, _ = run(u0, SolverConfig(t_end=0.5), burgers_flux())
    np.testing.assert_array_equal(a.u.values, b.u.values)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 32), amplitude=st.floats(0.01, 2.0),
       delta=st.floats(0.0, 0.5), gamma=st.floats(0.05, 2.0))
def test_mean_is_conserved_and_energy_bounded(seed, amplitude, delta, gamma):
    g = make_grid(math.pi, 64)
    u0 = random_field(g, seed, 6, amplitude)
    _, report = run(u0, SolverConfig(gamma=gamma, delta=delta, t_end=0.3), burgers_flux())
    assert np.max(np.abs(report.u_mean)) <= 1e-12 * (linf_norm(u0) + 1)
    bound = np.exp(2 * gamma * report.time) * report.u_l2sq[0] * (1 + 1e-6)
    assert np.all(report.u_l2sq <= bound)


def test_numpy_fallback_reproduces_numba_run(tmp_path):
    script = (
        "import json, math, numpy as np\n"
        "from ostrovsky import _accel\n"
        "from ostrovsky.evolution import SolverConfig, run, prepare_initial_data\n"
        "from ostrovsky.flux import burgers_flux\n"
        "from ostrovsky.grid import make_grid\n"
        "u0, _ = prepare_initial_data('random', make_grid(math.pi, 64), seed=9, kmax=6)\n"
        "s, _ = run(u0, SolverConfig(t_end=0.5), burgers_flux())\n"
        "print(json.dumps([_accel.backend_name(), s.u.values.tolist()]))\n"
    )
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, OSTROVSKY_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", script], env=env, capture_output=True,
                             text=True, check=True)
        name, values = json.loads(res.stdout)
        out[name] = np.array(values)
    assert set(out) == {"numba", "numpy"}
    np.testing.assert_allclose(out["numba"], out["numpy"], rtol=0, atol=1e-13)
