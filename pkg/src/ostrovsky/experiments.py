"""Scenario runners: twin-run stability, delta sweeps, refinement and MMS.

Configuration files are flat ``dotted.key = value`` text, one entry per
line, with ``#`` starting a comment. See :data:`CONFIG_KEYS`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .diagnostics import DiagnosticsReport, time_integrals
from .errors import ConfigError, GridMismatch
from .evolution import (SimState, Simulation, SolverConfig, cfl_dt, march,
                        prepare_initial_data, run)
from .flux import FluxModel, make_flux, sup_abs_second
from .grid import Field, GridSpec, derivative, l2_norm, linf_norm, make_grid
from .nonlocal_p import solve_p
from .verdict import Verdict

STABILITY_TOL = 1e-6
OMEGA_LINEARITY_TOL = 1e-12


# --- configuration -----------------------------------------------------------------

@dataclass
class ExperimentConfig:
    L: float = math.pi
    N: int = 256
    solver: SolverConfig = field(default_factory=SolverConfig)
    deltas: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
    flux: str = "burgers"
    flux_coefficients: tuple[float, ...] = ()
    flux_range: tuple[float, float] = (-2.0, 2.0)
    profile: str = "sine"
    profile_params: dict = field(default_factory=dict)
    perturbation: dict = field(
        default_factory=lambda: {"shape": "sine", "amplitude": 1e-3, "mode": 2})
    refine_n: tuple[int, ...] = (64, 128, 256)
    refine_dt: tuple[float, ...] = (0.04, 0.02, 0.01, 0.005)
    mms_solution: str = "decaying_sine"
    mms_n: tuple[int, ...] = (64, 128)
    mms_dt: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
    out_dir: str | None = None
    seed: int = 0

    def grid(self, N: int | None = None) -> GridSpec:
        return make_grid(self.L, self.N if N is None else N)

    def flux_model(self) -> FluxModel:
        return make_flux(self.flux, self.flux_coefficients, self.flux_range)

    def initial_data(self, grid: GridSpec | None = None) -> Field:
        grid = self.grid() if grid is None else grid
        params = dict(self.profile_params)
        if self.profile == "random":
            params.setdefault("seed", self.seed)
        return prepare_initial_data(self.profile, grid, **params)[0]

    def perturbed(self, u0: Field) -> Field:
        spec = dict(self.perturbation)
        shape = spec.pop("shape", "sine")
        amplitude = float(spec.pop("amplitude", 1e-3))
        mode = int(spec.pop("mode", 2))
        if shape != "sine":
            raise ValueError(f"unknown perturbation shape {shape!r}")
        x = u0.grid.x
        return u0 + amplitude * np.sin(mode * np.pi * x / u0.grid.L)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(";", ",").split(",") if v.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _dt(text: str):
    return "auto" if text.strip().lower() == "auto" else float(text)


def _scalar(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text.strip()


CONFIG_KEYS: dict[str, Callable[[str], object]] = {
    "grid.L": float,
    "grid.N": int,
    "solver.gamma": float,
    "solver.delta": _floats,
    "solver.dt": _dt,
    "solver.dt_max": float,
    "solver.t_end": float,
    "solver.cfl_safety": float,
    "solver.dealias": _bool,
    "solver.blowup_threshold": float,
    "solver.record_every": int,
    "sweep.deltas": _floats,
    "flux.name": str.strip,
    "flux.coefficients": _floats,
    "flux.range": _floats,
    "profile.name": str.strip,
    "perturbation.shape": str.strip,
    "perturbation.amplitude": float,
    "perturbation.mode": int,
    "refine.N": _ints,
    "refine.dt": _floats,
    "mms.solution": str.strip,
    "mms.N": _ints,
    "mms.dt": _floats,
    "output.dir": str.strip,
    "seed": int,
}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse the dotted key-value format; errors name the offending line."""
    values: dict[str, object] = {}
    profile_params: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, val = (s.strip() for s in line.partition("="))
        if key.startswith("profile.") and key != "profile.name":
            profile_params[key.split(".", 1)[1]] = _scalar(val)
            continue
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = CONFIG_KEYS[key](val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
        lines[key] = lineno

    solver_kw = {}
    for key, val in values.items():
        if key.startswith("solver.") and key != "solver.delta":
            solver_kw[key.split(".", 1)[1]] = val
    cfg = ExperimentConfig()
    if "solver.delta" in values:
        deltas = values["solver.delta"]
        if len(deltas) == 0:
            raise ConfigError(f"{source}:{lines['solver.delta']}: empty delta list")
        solver_kw["delta"] = deltas[0]
        if len(deltas) > 1:
            cfg.deltas = deltas
    try:
        cfg.solver = replace(cfg.solver, **solver_kw)
    except ValueError as exc:
        first = min((lines[k] for k in values if k.startswith("solver.")), default=0)
        raise ConfigError(f"{source}:{first}: invalid solver settings: {exc}") from None

    simple = {
        "grid.L": "L", "grid.N": "N", "sweep.deltas": "deltas", "flux.name": "flux",
        "flux.coefficients": "flux_coefficients", "profile.name": "profile",
        "refine.N": "refine_n", "refine.dt": "refine_dt", "mms.solution": "mms_solution",
        "mms.N": "mms_n", "mms.dt": "mms_dt", "output.dir": "out_dir", "seed": "seed",
    }
    for key, attr in simple.items():
        if key in values:
            setattr(cfg, attr, values[key])
    if "flux.range" in values:
        rng = values["flux.range"]
        if len(rng) != 2:
            raise ConfigError(f"{source}:{lines['flux.range']}: flux.range needs two values")
        cfg.flux_range = (rng[0], rng[1])
    for key in ("shape", "amplitude", "mode"):
        if f"perturbation.{key}" in values:
            cfg.perturbation[key] = values[f"perturbation.{key}"]
    cfg.profile_params = profile_params

    # fail early on bad names and grids, attributing to the right line
    checks = [
        ("grid.N", lambda: cfg.grid()), ("grid.L", lambda: cfg.grid()),
        ("flux.name", cfg.flux_model), ("profile.name", lambda: cfg.initial_data()),
    ]
    for key, check in checks:
        try:
            check()
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{source}:{lines.get(key, 0)}: {exc}") from None
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(path.read_text(), str(path))


# --- twin-run stability ------------------------------------------------------------

@dataclass(frozen=True)
class StabilityReport:
    times: np.ndarray
    omega_l2: np.ndarray
    c_fit: float
    c_bound: float
    verdict: Verdict
    omega_linearity: float
    bound_terms: dict


def stability_experiment(config: ExperimentConfig, u0: Field, v0: Field) -> StabilityReport:
    """Evolve u0 and v0 side by side and test the L2 stability estimate.

    The bound exponent is assembled from the energy estimate for
    omega = u - v: the transport term contributes max|f''(u) u_x|, the flux
    difference 2 sup|f''| max|v_x| with the sup over the range both solutions
    visit, and for delta > 0 the nonlocal term adds 2 gamma delta.
    """
    if u0.grid != v0.grid:
        raise GridMismatch("u0 and v0 live on different grids")
    solver = config.solver
    flux = config.flux_model()
    su = Simulation(u0, solver, flux)
    sv = Simulation(v0, solver, flux)
    times, omega, transport, vx_sup = [], [], [], []
    lo, hi = [np.inf], [-np.inf]
    linearity = [0.0]

    def record():
        a, b = su.state(), sv.state()
        w = a.u - b.u
        big_omega = solve_p(w, solver.delta)
        scale = linf_norm(a.u) + linf_norm(b.u)
        if scale > 0:
            gap = linf_norm(big_omega - (a.p - b.p)) / scale
            linearity[0] = max(linearity[0], gap)
        ux = derivative(a.u, 1).values
        vx = derivative(b.u, 1).values
        times.append(a.t)
        omega.append(l2_norm(w))
        transport.append(float(np.max(np.abs(flux.f_second(a.u.values) * ux))))
        vx_sup.append(float(np.max(np.abs(vx))))
        lo[0] = min(lo[0], a.u.values.min(), b.u.values.min())
        hi[0] = max(hi[0], a.u.values.max(), b.u.values.max())

    record()
    march([su, sv], solver, record)

    t = np.array(times)
    w = np.array(omega)
    s2 = sup_abs_second(flux, lo[0], hi[0])
    nonlocal_term = 2.0 * solver.gamma * solver.delta
    per_time = np.array(transport) + 2.0 * s2 * np.array(vx_sup)
    c_bound = float(np.max(per_time)) + nonlocal_term
    w0 = w[0]
    if w0 > 0:
        later = t > 0
        c_fit = float(np.max(np.log(w[later] / w0) / t[later])) if later.any() else 0.0
    else:
        c_fit = 0.0
    bound = np.exp(c_bound * t) * w0 * (1.0 + STABILITY_TOL)
    ok = w <= bound
    i = int(np.argmin(bound - w))
    verdict = Verdict(
        "stability", bool(ok.all() and linearity[0] <= OMEGA_LINEARITY_TOL),
        float(bound[i] - w[i]), float(t[i]),
        {"c_fit": c_fit, "c_bound": c_bound, "c_bound_without_nonlocal": c_bound - nonlocal_term,
         "omega_linearity": linearity[0]})
    return StabilityReport(t, w, c_fit, c_bound, verdict, linearity[0], {
        "sup_transport": float(np.max(transport)), "sup_abs_f2": s2,
        "sup_vx": float(np.max(vx_sup)), "nonlocal": nonlocal_term,
        "attained_range": (float(lo[0]), float(hi[0]))})


# --- delta sweep -------------------------------------------------------------------

@dataclass(frozen=True)
class SweepTable:
    deltas: np.ndarray
    errors: np.ndarray
    orders: np.ndarray
    sqrt_delta_sup_px: np.ndarray
    majorants: np.ndarray
    dt: float
    reports: dict = field(repr=False, default_factory=dict)

    def rows(self):
        for i, d in enumerate(self.deltas):
            order = self.orders[i - 1] if i > 0 else float("nan")
            yield (float(d), float(self.errors[i]), float(order),
                   float(self.sqrt_delta_sup_px[i]), float(self.majorants[i]))


def shared_dt(config: ExperimentConfig, u0: Field) -> float:
    if config.solver.dt != "auto":
        return float(config.solver.dt)
    s = config.solver
    return cfl_dt(u0, u0.grid, config.flux_model(), s.cfl_safety, s.dt_max)


def delta_sweep(config: ExperimentConfig, u0: Field,
                deltas: Sequence[float] | None = None, workers: int = 1) -> SweepTable:
    """Errors |u_delta(T) - u_0(T)|_2 along a descending delta list.

    All runs share grid, flux, initial data and one fixed step size; the
    reference is the delta = 0 run.
    """
    deltas = tuple(config.deltas if deltas is None else deltas)
    if list(deltas) != sorted(deltas, reverse=True):
        raise ValueError("delta list must be sorted in descending order")
    dt = shared_dt(config, u0)
    flux = config.flux_model()

    def one(delta):
        solver = replace(config.solver, delta=float(delta), dt=dt)
        return run(u0, solver, flux)

    todo = [0.0, *[d for d in deltas if d != 0.0]]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = dict(zip(todo, pool.map(one, todo)))
    ref_state, _ = results[0.0]
    errors, sup_px, majorants, reports = [], [], [], {}
    for d in deltas:
        state, report = results[float(d)]
        reports[float(d)] = report
        errors.append(l2_norm(state.u - ref_state.u))
        sup_px.append(math.sqrt(d) * float(np.max(report.px_linf)))
        majorants.append(math.sqrt(d) * math.exp(config.solver.gamma * config.solver.t_end)
                         * report.u0_l2)
    errors = np.array(errors)
    d = np.array(deltas, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log(errors[:-1] / errors[1:]) / np.log(d[:-1] / d[1:])
    return SweepTable(d, errors, orders, np.array(sup_px), np.array(majorants), dt, reports)


# --- self-refinement ---------------------------------------------------------------

@dataclass(frozen=True)
class RefinementResult:
    n_list: tuple[int, ...]
    dt_list: tuple[float, ...]
    spatial_errors: np.ndarray
    spatial_orders: np.ndarray
    temporal_errors: np.ndarray
    temporal_orders: np.ndarray


def _observed_orders(errors: np.ndarray, ratio: float = 2.0) -> np.ndarray:
    errors = np.asarray(errors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(errors[:-1] / errors[1:]) / np.log(ratio)


def refinement_study(config: ExperimentConfig, n_list: Sequence[int] | None = None,
                     dt_list: Sequence[float] | None = None) -> RefinementResult:
    """Self-convergence against the finest run.

    Spatial: every N in ``n_list`` (nested doublings) at the smallest dt,
    compared on the coarse points. Temporal: every dt (successive halvings)
    at the largest N, compared with the smallest dt.
    """
    n_list = tuple(sorted(config.refine_n if n_list is None else n_list))
    dt_list = tuple(sorted(config.refine_dt if dt_list is None else dt_list, reverse=True))
    for a, b in zip(n_list, n_list[1:]):
        if b != 2 * a:
            raise ValueError("N list must be successive doublings")
    flux = config.flux_model()
    dt_min = dt_list[-1]

    def final(N, dt):
        u0 = config.initial_data(config.grid(N))
        state, _ = run(u0, replace(config.solver, dt=dt), flux)
        return state.u.values

    finest = final(n_list[-1], dt_min)
    spatial = []
    for N in n_list[:-1]:
        coarse = final(N, dt_min)
        stride = n_list[-1] // N
        spatial.append(math.sqrt(2.0 * config.L / N * np.sum((coarse - finest[::stride]) ** 2)))
    temporal = []
    for dt in dt_list[:-1]:
        temporal.append(math.sqrt(2.0 * config.L / n_list[-1]
                                  * np.sum((final(n_list[-1], dt) - finest) ** 2)))
    spatial = np.array(spatial)
    temporal = np.array(temporal)
    return RefinementResult(n_list, dt_list, spatial, _observed_orders(spatial),
                            temporal, _observed_orders(temporal))


def record_every_sensitivity(u0: Field, solver: SolverConfig, flux: FluxModel,
                             record_every: int = 2) -> dict:
    """Relative change of the time-integral diagnostics when sampling twice as often."""
    if record_every < 2 or record_every % 2:
        raise ValueError("record_every must be even and >= 2")
    coarse = time_integrals(run(u0, replace(solver, record_every=record_every), flux)[1])
    fine = time_integrals(run(u0, replace(solver, record_every=record_every // 2), flux)[1])
    return {k: abs(coarse[k] - fine[k]) / max(abs(fine[k]), 1e-300) for k in fine}


# --- manufactured solutions --------------------------------------------------------

@dataclass(frozen=True)
class ManufacturedSolution:
    """u*(t, x) with its time derivative and first two space derivatives."""

    name: str
    u: Callable[[float, np.ndarray], np.ndarray]
    u_t: Callable[[float, np.ndarray], np.ndarray]
    u_x: Callable[[float, np.ndarray], np.ndarray]
    u_xx: Callable[[float, np.ndarray], np.ndarray]


def decaying_sine(L: float = math.pi, amplitude: float = 1.0, mode: int = 1):
    """u* = a exp(-t) sin(m pi x / L)."""
    k = mode * math.pi / L

    def u(t, x):
        return amplitude * math.exp(-t) * np.sin(k * x)

    return ManufacturedSolution(
        "decaying_sine", u, lambda t, x: -u(t, x),
        lambda t, x: amplitude * k * math.exp(-t) * np.cos(k * x),
        lambda t, x: -k * k * u(t, x))


def steady_sine(L: float = math.pi, amplitude: float = 1.0, mode: int = 1):
    """Time-independent u* = a sin(m pi x / L)."""
    k = mode * math.pi / L
    return ManufacturedSolution(
        "steady_sine", lambda t, x: amplitude * np.sin(k * x),
        lambda t, x: np.zeros_like(x),
        lambda t, x: amplitude * k * np.cos(k * x),
        lambda t, x: -amplitude * k * k * np.sin(k * x))


def _poisson_derivatives(theta, r):
    # g = (1 - r^2) / D with D = 1 - 2 r cos(theta) + r^2; returns g', g'', g'''
    c = 1.0 - r * r
    D = 1.0 - 2.0 * r * np.cos(theta) + r * r
    d1 = 2.0 * r * np.sin(theta)
    d2 = 2.0 * r * np.cos(theta)
    d3 = -d1
    g1 = -c * d1 / D ** 2
    g2 = -c * (d2 / D ** 2 - 2.0 * d1 ** 2 / D ** 3)
    g3 = -c * (d3 / D ** 2 - 6.0 * d1 * d2 / D ** 3 + 6.0 * d1 ** 3 / D ** 4)
    return g1, g2, g3


def decaying_poisson(L: float = math.pi, r: float = 0.5, amplitude: float = 1.0):
    """u* = A exp(-t) g'(pi x / L), g the Poisson kernel with radius r.

    Fourier coefficients decay like r^|j|, so unlike a single sine this
    solution is not captured exactly by any finite grid. A is chosen so that
    max|u*(0, .)| = amplitude.
    """
    k = math.pi / L
    peak = np.max(np.abs(_poisson_derivatives(np.linspace(-np.pi, np.pi, 20001), r)[0]))
    a = amplitude / peak

    def part(t, x, i):
        return a * math.exp(-t) * k ** i * _poisson_derivatives(k * x, r)[i]

    return ManufacturedSolution(
        "decaying_poisson", lambda t, x: part(t, x, 0), lambda t, x: -part(t, x, 0),
        lambda t, x: part(t, x, 1), lambda t, x: part(t, x, 2))


MANUFACTURED = {
    "decaying_sine": decaying_sine,
    "steady_sine": steady_sine,
    "decaying_poisson": decaying_poisson,
}


def mms_source(ms: ManufacturedSolution, grid: GridSpec, solver: SolverConfig,
               flux: FluxModel) -> Callable[[float], np.ndarray]:
    """S = u*_t + f'(u*) u*_x - gamma P* - u*_xx sampled pointwise, as rfft coefficients.

    Only P* comes from the discrete nonlocal solve; the other terms are exact.
    """
    x = grid.x

    def forcing(t):
        us = ms.u(t, x)
        p_star = solve_p(Field(grid, us), solver.delta).values
        s = ms.u_t(t, x) + flux.f_prime(us) * ms.u_x(t, x) - ms.u_xx(t, x) - solver.gamma * p_star
        return np.fft.rfft(s)

    return forcing


def mms_error(ms: ManufacturedSolution, grid: GridSpec, solver: SolverConfig,
              flux: FluxModel) -> float:
    """max over recorded times of |u(t) - u*(t)|_2."""
    x = grid.x
    worst = [0.0]

    def observe(state: SimState):
        worst[0] = max(worst[0], l2_norm(state.u - ms.u(state.t, x)))

    u0 = Field(grid, ms.u(0.0, x))
    run(u0, solver, flux, [observe], mms_source(ms, grid, solver, flux))
    return worst[0]


@dataclass(frozen=True)
class MMSResult:
    solution: str
    n_list: tuple[int, ...]
    dt_list: tuple[float, ...]
    spatial_errors: np.ndarray
    temporal_floor: float
    temporal_errors: np.ndarray
    temporal_orders: np.ndarray
    fitted_temporal_order: float

    def spatial_reduction(self) -> np.ndarray:
        e = self.spatial_errors
        with np.errstate(divide="ignore", invalid="ignore"):
            return e[:-1] / e[1:]

    def spatial_excess(self) -> np.ndarray:
        """Error above the temporal floor at each N."""
        return np.abs(self.spatial_errors - self.temporal_floor)


def mms_run(config: ExperimentConfig, ms: ManufacturedSolution | str | None = None,
            n_list: Sequence[int] | None = None, dt_list: Sequence[float] | None = None,
            spatial_dt: float | None = None) -> MMSResult:
    """Recover a manufactured solution; errors versus N and versus dt.

    Spatial errors use ``spatial_dt`` (default: a tenth of the smallest dt);
    the temporal floor is the error at twice the largest N with that dt.
    Temporal errors use the largest N.
    """
    if ms is None:
        ms = config.mms_solution
    if isinstance(ms, str):
        ms = MANUFACTURED[ms](config.L)
    n_list = tuple(sorted(config.mms_n if n_list is None else n_list))
    dt_list = tuple(sorted(config.mms_dt if dt_list is None else dt_list, reverse=True))
    flux = config.flux_model()
    sdt = dt_list[-1] / 10.0 if spatial_dt is None else spatial_dt

    def err(N, dt):
        return mms_error(ms, config.grid(N), replace(config.solver, dt=dt), flux)

    spatial = np.array([err(N, sdt) for N in n_list])
    floor = err(2 * n_list[-1], sdt)
    temporal = np.array([err(n_list[-1], dt) for dt in dt_list])
    ratios = np.array(dt_list[:-1]) / np.array(dt_list[1:])
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log(temporal[:-1] / temporal[1:]) / np.log(ratios)
    fitted = (float(np.polyfit(np.log(dt_list), np.log(temporal), 1)[0])
              if len(dt_list) > 1 else float("nan"))
    return MMSResult(ms.name, n_list, dt_list, spatial, floor, temporal, orders, fitted)


def spatial_reduction_holds(result: MMSResult, factor: float = 10.0,
                            roundoff: float = 1e-12) -> bool:
    """Each doubling of N cuts the error above the temporal floor by ``factor``.

    Errors already within ``roundoff`` of the floor have nothing left to
    reduce and count as converged.
    """
    excess = result.spatial_excess()
    for coarse, fine in zip(excess[:-1], excess[1:]):
        if fine > coarse / factor + roundoff:
            return False
    return True
