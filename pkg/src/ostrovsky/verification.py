"""Built-in verification scenarios, one per acceptance criterion.

Each ``criterion_*`` function runs its scenario and returns a Verdict;
:func:`run_verification` runs them all in order.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Callable

import numpy as np

from .diagnostics import (energy_bound_check, linf_bound_check, mean_conservation_check,
                          p_bounds_check)
from .evolution import Simulation, SolverConfig, march, random_band_limited, run
from .experiments import (ExperimentConfig, decaying_poisson, delta_sweep, mms_run,
                          record_every_sensitivity, spatial_reduction_holds,
                          stability_experiment)
from .flux import burgers_flux
from .grid import Field, inner_product, l2_norm, linf_norm, make_grid
from .nonlocal_p import check_elliptic_identity, coupling_residual, solve_p
from .verdict import Verdict

IDENTITY_TOL = 1e-10
CLOSED_FORM_TOL = 1e-12
MEAN_TOL = 1e-12
SWEEP_MIN_ORDER = 0.8
MMS_SPATIAL_FACTOR = 10.0
DESIGN_ORDER = 4.0
ORDER_SLACK = 0.3
RECORD_TOL = 1e-6

SAMPLE_DELTAS = (0.0, 0.01, 0.1, 0.5, 0.99)
SAMPLE_COUNT = 100


def standard_config(t_end: float = 2.0, **solver) -> ExperimentConfig:
    """Burgers, sine data on [-pi, pi), N = 256, gamma = 0.5, delta = 0.1."""
    cfg = ExperimentConfig(L=math.pi, N=256)
    cfg.solver = replace(SolverConfig(gamma=0.5, delta=0.1, t_end=t_end), **solver)
    return cfg


def random_samples(count: int = SAMPLE_COUNT, N: int = 256, L: float = math.pi):
    """Zero-mean band-limited random fields with varied bandwidth and amplitude."""
    grid = make_grid(L, N)
    out = []
    for seed in range(count):
        kmax = 4 + (seed * 7) % (N // 4)
        amplitude = 10.0 ** ((seed % 5) - 2)
        out.append(Field(grid, random_band_limited(grid, seed, kmax=kmax, amplitude=amplitude)))
    return out


def criterion_1_elliptic_identity() -> Verdict:
    worst = 0.0
    for u in random_samples():
        for d in SAMPLE_DELTAS:
            worst = max(worst, check_elliptic_identity(u, solve_p(u, d), d))
    return Verdict("elliptic_identity", worst <= IDENTITY_TOL, IDENTITY_TOL - worst,
                   details={"max_relative_residual": worst})


def criterion_2_coupling_identity() -> Verdict:
    worst = 0.0
    worst_ratio = 0.0
    for u in random_samples():
        for d in SAMPLE_DELTAS:
            p = solve_p(u, d)
            worst = max(worst, coupling_residual(u, p, d))
            worst_ratio = max(worst_ratio, inner_product(u, p) / l2_norm(u) ** 2)
    passed = worst <= IDENTITY_TOL and worst_ratio <= 1.0 + IDENTITY_TOL
    return Verdict("coupling_identity", passed, IDENTITY_TOL - worst,
                   details={"max_relative_residual": worst, "max_uP_over_u2": worst_ratio})


def criterion_3_closed_form() -> Verdict:
    grid = make_grid(math.pi, 256)
    x = grid.x
    u = Field(grid, np.sin(x))
    err1 = float(np.max(np.abs(solve_p(u, 1.0).values - 0.5 * (np.sin(x) - np.cos(x)))))
    err0 = float(np.max(np.abs(solve_p(u, 0.0).values + np.cos(x))))
    worst = max(err1, err0)
    return Verdict("closed_form_p", worst <= CLOSED_FORM_TOL, CLOSED_FORM_TOL - worst,
                   details={"error_delta_1": err1, "error_delta_0": err0})


def _standard_run(t_end: float = 2.0):
    cfg = standard_config(t_end)
    return run(cfg.initial_data(), cfg.solver, cfg.flux_model())[1]


def criterion_4_mean_conservation() -> Verdict:
    return replace(mean_conservation_check(_standard_run(5.0)), name="mean_conservation")


def criterion_5_energy_bound() -> Verdict:
    report = _standard_run()
    energy = energy_bound_check(report, report.gamma)
    p = p_bounds_check(report, report.gamma, report.u0_l2)
    return Verdict("energy_bound", energy.passed and p.passed,
                   min(energy.worst_margin, p.worst_margin),
                   energy.worst_time if energy.worst_margin <= p.worst_margin else p.worst_time,
                   {"energy": energy.details, "px_bound": p.details})


def criterion_6_linf_bound() -> Verdict:
    report = _standard_run()
    return linf_bound_check(report, report.gamma, report.u0_linf)


def criterion_7_stability() -> Verdict:
    cfg = standard_config()
    u0 = cfg.initial_data()
    rep = stability_experiment(cfg, u0, cfg.perturbed(u0))
    same = stability_experiment(cfg, u0, u0)
    identical = bool(np.all(same.omega_l2 == 0.0))
    details = dict(rep.verdict.details)
    details["identical_twins_zero"] = identical
    return Verdict("stability", rep.verdict.passed and identical, rep.verdict.worst_margin,
                   rep.verdict.worst_time, details)


def criterion_8_delta_sweep() -> Verdict:
    cfg = standard_config()
    table = delta_sweep(cfg, cfg.initial_data())
    e = table.errors
    s = table.sqrt_delta_sup_px
    decreasing = bool(np.all(np.diff(e) < 0))
    orders_ok = bool(np.all(table.orders >= SWEEP_MIN_ORDER))
    sup_decreasing = bool(np.all(np.diff(s) < 0))
    within = bool(np.all(s <= table.majorants))
    passed = decreasing and orders_ok and sup_decreasing and within
    return Verdict("delta_convergence", passed, float(np.min(table.orders) - SWEEP_MIN_ORDER),
                   details={"deltas": table.deltas.tolist(), "errors": e.tolist(),
                            "orders": table.orders.tolist(),
                            "sqrt_delta_sup_px": s.tolist(),
                            "majorants": table.majorants.tolist()})


def criterion_9_verification() -> Verdict:
    cfg = ExperimentConfig(L=math.pi, mms_n=(64, 128), mms_dt=(0.2, 0.1, 0.05, 0.025))
    cfg.solver = SolverConfig(gamma=0.5, delta=0.1, t_end=1.0)
    sine = mms_run(cfg, "decaying_sine")
    spatial_ok = spatial_reduction_holds(sine, MMS_SPATIAL_FACTOR)
    orders = sine.temporal_orders
    temporal_ok = bool(np.all(np.abs(orders - DESIGN_ORDER) <= ORDER_SLACK))
    # a solution with infinitely many modes shows the spectral decay itself
    poisson = mms_run(cfg, decaying_poisson(cfg.L, r=0.5, amplitude=0.5),
                      dt_list=(cfg.mms_dt[-1],))
    poisson_ok = bool(np.all(poisson.spatial_reduction() > MMS_SPATIAL_FACTOR))

    std = standard_config(dt=2.5e-4)
    changes = record_every_sensitivity(std.initial_data(), std.solver, std.flux_model())
    record_ok = max(changes.values()) < RECORD_TOL
    passed = spatial_ok and temporal_ok and poisson_ok and record_ok
    return Verdict("verification", passed,
                   float(ORDER_SLACK - np.max(np.abs(orders - DESIGN_ORDER))),
                   details={
                       "sine_spatial_errors": sine.spatial_errors.tolist(),
                       "sine_temporal_floor": sine.temporal_floor,
                       "sine_temporal_orders": orders.tolist(),
                       "poisson_spatial_errors": poisson.spatial_errors.tolist(),
                       "poisson_reduction": poisson.spatial_reduction().tolist(),
                       "record_every_changes": changes,
                   })


def criterion_10_zero_data(steps: int = 10_000) -> Verdict:
    grid = make_grid(math.pi, 256)
    solver = SolverConfig(gamma=0.5, delta=0.1, dt=1e-3, t_end=steps * 1e-3)
    sim = Simulation(Field.zeros(grid), solver, burgers_flux())
    nonzero = [0]

    def check():
        nonzero[0] += int(np.count_nonzero(sim.u_values))

    march([sim], solver, check)
    passed = nonzero[0] == 0 and sim.step_index == steps
    return Verdict("zero_data", passed, details={"steps": sim.step_index,
                                                 "nonzero_entries": nonzero[0],
                                                 "linf": linf_norm(sim.state().u)})


CRITERIA: list[tuple[int, Callable[[], Verdict]]] = [
    (1, criterion_1_elliptic_identity),
    (2, criterion_2_coupling_identity),
    (3, criterion_3_closed_form),
    (4, criterion_4_mean_conservation),
    (5, criterion_5_energy_bound),
    (6, criterion_6_linf_bound),
    (7, criterion_7_stability),
    (8, criterion_8_delta_sweep),
    (9, criterion_9_verification),
    (10, criterion_10_zero_data),
]


def run_verification(only=None) -> list[tuple[int, Verdict]]:
    out = []
    for number, fn in CRITERIA:
        if only is None or number in only:
            out.append((number, fn()))
    return out


def format_table(results) -> str:
    lines = [f"{'#':>3}  {'check':<20} {'result':<6} worst_margin"]
    for number, v in results:
        status = "PASS" if v.passed else "FAIL"
        lines.append(f"{number:>3}  {v.name:<20} {status:<6} {v.worst_margin:.3e}")
    return "\n".join(lines)
