"""Time integration of  u_t + f(u)_x = gamma P + u_xx,  -delta P_xx + P_x = u.

Because P is linear in u, the term gamma P joins the diffusion in the linear
operator, which is diagonal in Fourier space with symbol

    L(k) = -k^2 + gamma / (delta k^2 + i k),   L(0) = 0.

The linear part is propagated exactly and the flux derivative is treated
explicitly with the fourth-order exponential Runge-Kutta scheme of Cox and
Matthews (ETDRK4). The k = 0 row of the scheme is the identity, so the mean
of u is conserved exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .diagnostics import DiagnosticsReport, Recorder
from .errors import BlowUp
from .flux import FluxModel
from .grid import Field, GridSpec, from_spectral, l2_norm, linf_norm
from .nonlocal_p import check_zero_mean, p_symbol, solve_p

log = logging.getLogger(__name__)

EPS_FLOOR = 1e-12
TURNOVER_FRACTION = 0.1
PHI_SERIES_RADIUS = 1.0
_PHI_TERMS = 24

Forcing = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class SolverConfig:
    gamma: float = 0.5
    delta: float = 0.1
    dt: float | str = "auto"
    t_end: float = 2.0
    cfl_safety: float = 0.5
    dealias: bool = True
    blowup_threshold: float = 1e6
    record_every: int = 1
    dt_max: float = 0.05

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not 0 <= self.delta < 1:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be > 0, got {self.t_end}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if not self.blowup_threshold > 0:
            raise ValueError("blowup_threshold must be > 0")
        if int(self.record_every) < 1:
            raise ValueError("record_every must be >= 1")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be > 0")
        if self.dt != "auto" and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ValueError(f"dt must be 'auto' or a positive number, got {self.dt!r}")


@dataclass(frozen=True)
class SimState:
    t: float
    u: Field
    p: Field
    step_index: int


# --- initial data -------------------------------------------------------------

def _sine(x, L, amplitude=1.0, mode=1):
    return amplitude * np.sin(mode * np.pi * x / L)


def _sine_packet(x, L, amplitude=1.0, mode=4, width=None):
    width = L / 4 if width is None else width
    return amplitude * np.sin(mode * np.pi * x / L) * np.exp(-(x / width) ** 2)


def _gaussian(x, L, amplitude=1.0, width=1.0):
    return amplitude * np.exp(-(x / width) ** 2)


def _gaussian_derivative(x, L, amplitude=1.0, width=1.0):
    # scaled so the peak value is ``amplitude``
    scale = width * math.exp(0.5) / math.sqrt(2.0)
    return amplitude * scale * (-2.0 * x / width ** 2) * np.exp(-(x / width) ** 2)


def _bump(x, L, amplitude=1.0, width=1.0):
    s = np.clip(np.abs(x) / width, 0.0, 1.0)
    out = np.zeros_like(x)
    inside = s < 1.0
    out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def random_band_limited(grid: GridSpec, seed: int, kmax: int | None = None,
                        amplitude: float = 1.0) -> np.ndarray:
    """Sum of modes 1..kmax with split-mix uniform coefficients in [-1, 1).

    Scaled so max|u| = amplitude. Draw order: for j = 1..kmax, the cosine
    coefficient then the sine coefficient.
    """
    kmax = grid.N // 8 if kmax is None else int(kmax)
    if not 1 <= kmax < grid.N // 2:
        raise ValueError(f"kmax must lie in [1, N/2), got {kmax}")
    draws = 2.0 * kernels.splitmix64_uniform(np.uint64(int(seed) % 2 ** 64), 2 * kmax) - 1.0
    j = np.arange(1, kmax + 1)
    phase = np.outer(np.pi * j / grid.L, grid.x)
    u = draws[0::2] @ np.cos(phase) + draws[1::2] @ np.sin(phase)
    return amplitude * u / np.max(np.abs(u))


PROFILES = {
    "sine": _sine,
    "sine_packet": _sine_packet,
    "gaussian": _gaussian,
    "gaussian_derivative": _gaussian_derivative,
    "bump": _bump,
}


def profile_values(name: str, grid: GridSpec, **params) -> np.ndarray:
    if name == "random":
        return random_band_limited(grid, **params)
    try:
        fn = PROFILES[name]
    except KeyError:
        known = ", ".join(sorted([*PROFILES, "random"]))
        raise ValueError(f"unknown profile {name!r}; known: {known}") from None
    return fn(grid.x, grid.L, **params)


def prepare_initial_data(profile: str, grid: GridSpec, **params) -> tuple[Field, Field]:
    """Sample a named profile, remove its mean, and build P0 with P0' = u0."""
    values = np.asarray(profile_values(profile, grid, **params), dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError(f"profile {profile!r} with {params} gives non-finite samples")
    m = values.mean()
    if m != 0.0:
        values = values - m
    u0 = Field(grid, values)
    p0 = solve_p(u0, 0.0)
    log.debug("initial data %s: |u0|_2=%.6g |u0|_inf=%.6g |P0|_2=%.6g",
              profile, l2_norm(u0), linf_norm(u0), l2_norm(p0))
    return u0, p0


# --- linear operator and exponential integrator -------------------------------

def linear_symbol(k, gamma: float, delta: float):
    """L(k) = -k^2 + gamma / (delta k^2 + i k), with L(0) = 0."""
    k = np.asarray(k, dtype=float)
    out = np.zeros(k.shape, dtype=complex)
    nz = k != 0
    kk = k[nz]
    out[nz] = -kk ** 2 + gamma / (delta * kk ** 2 + 1j * kk)
    if out.ndim == 0:
        return complex(out)
    return out


def phi_functions(z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """phi_1, phi_2, phi_3 of the exponential integrator.

    phi_n(z) = sum_m z^m / (m + n)!; the closed forms lose digits for small
    |z|, so the series is used inside |z| < PHI_SERIES_RADIUS.
    """
    z = np.asarray(z, dtype=complex)
    phi1 = np.empty_like(z)
    phi2 = np.empty_like(z)
    phi3 = np.empty_like(z)
    small = np.abs(z) < PHI_SERIES_RADIUS
    zs = z[small]
    s1 = np.zeros_like(zs)
    s2 = np.zeros_like(zs)
    s3 = np.zeros_like(zs)
    for m in range(_PHI_TERMS - 1, -1, -1):  # Horner
        s1 = s1 * zs + 1.0 / math.factorial(m + 1)
        s2 = s2 * zs + 1.0 / math.factorial(m + 2)
        s3 = s3 * zs + 1.0 / math.factorial(m + 3)
    phi1[small], phi2[small], phi3[small] = s1, s2, s3
    zl = z[~small]
    em1 = np.expm1(zl)
    phi1[~small] = em1 / zl
    phi2[~small] = (em1 - zl) / zl ** 2
    phi3[~small] = (em1 - zl - 0.5 * zl ** 2) / zl ** 3
    return phi1, phi2, phi3


class ETDRK4:
    """Fourth-order exponential time differencing on rfft coefficients."""

    def __init__(self, grid: GridSpec, gamma: float, delta: float, flux: FluxModel,
                 dealias: bool = True, forcing: Forcing | None = None):
        self.grid = grid
        self.flux = flux
        self.forcing = forcing
        sym = linear_symbol(grid.k, gamma, delta)
        sym[-1] = -grid.k[-1] ** 2  # P carries no Nyquist mode
        self.symbol = sym
        self.mask = grid.dealias_mask if dealias else np.ones(grid.k.shape, bool)
        self._minus_ik = -1j * grid.k_odd * self.mask
        self._cached_dt = None
        self._coeffs = None

    def coefficients(self, dt: float):
        if dt != self._cached_dt:
            z = self.symbol * dt
            p1h, _, _ = phi_functions(0.5 * z)
            p1, p2, p3 = phi_functions(z)
            self._coeffs = (
                np.exp(z), np.exp(0.5 * z), 0.5 * dt * p1h,
                dt * (p1 - 3.0 * p2 + 4.0 * p3),
                dt * (p2 - 2.0 * p3),
                dt * (4.0 * p3 - p2),
            )
            self._cached_dt = dt
        return self._coeffs

    def nonlinear(self, v: np.ndarray, t: float) -> np.ndarray:
        u = np.fft.irfft(v * self.mask, n=self.grid.N)
        out = self._minus_ik * np.fft.rfft(self.flux.f(u))
        if self.forcing is not None:
            out = out + self.forcing(t)
        return out

    def advance(self, v: np.ndarray, t: float, dt: float) -> np.ndarray:
        e, e2, q, f1, f2, f3 = self.coefficients(dt)
        nv = self.nonlinear(v, t)
        a = kernels.etd_stage(e2, v, q, nv)
        na = self.nonlinear(a, t + 0.5 * dt)
        b = kernels.etd_stage(e2, v, q, na)
        nb = self.nonlinear(b, t + 0.5 * dt)
        c = kernels.etd_stage_c(e2, a, q, nb, nv)
        nc = self.nonlinear(c, t + dt)
        out = kernels.etd_combine(e, v, f1, f2, f3, nv, na, nb, nc)
        out[0] = v[0]
        return out


def cfl_dt(u: Field, grid: GridSpec, flux: FluxModel, cfl_safety: float,
           dt_max: float = 0.05) -> float:
    """Advective step limit, capped by a fraction of the domain turnover time."""
    return _cfl_dt(u.values, grid, flux, cfl_safety, dt_max)


def _cfl_dt(values, grid, flux, cfl_safety, dt_max):
    speed = max(EPS_FLOOR, float(np.max(np.abs(flux.f_prime(values)))))
    advective = cfl_safety * grid.dx / speed
    turnover = 2.0 * grid.L / speed
    return min(advective, TURNOVER_FRACTION * turnover, dt_max)


class Simulation:
    """Stateful driver around :class:`ETDRK4` holding the spectral state."""

    def __init__(self, u0: Field, config: SolverConfig, flux: FluxModel,
                 forcing: Forcing | None = None, t0: float = 0.0):
        check_zero_mean(u0)
        self.grid = u0.grid
        self.config = config
        self.flux = flux
        self.scheme = ETDRK4(self.grid, config.gamma, config.delta, flux,
                             config.dealias, forcing)
        self._p_sym = p_symbol(self.grid, config.delta)
        self.v = u0.spectral()
        self.u_values = np.array(u0.values)
        self.t = float(t0)
        self.step_index = 0
        self._check_blowup()

    def _check_blowup(self):
        u = self.u_values
        linf = float(np.max(np.abs(u))) if np.all(np.isfinite(u)) else np.inf
        if not linf <= self.config.blowup_threshold:
            raise BlowUp(self.t, linf, self.config.blowup_threshold)

    def suggested_dt(self) -> float:
        cfg = self.config
        if cfg.dt == "auto":
            return _cfl_dt(self.u_values, self.grid, self.flux, cfg.cfl_safety, cfg.dt_max)
        return float(cfg.dt)

    def advance(self, dt: float, t_new: float | None = None):
        """Take one step; ``t_new`` pins the clock to avoid accumulated drift."""
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        self.v = self.scheme.advance(self.v, self.t, dt)
        self.u_values = np.fft.irfft(self.v, n=self.grid.N)
        self.t = self.t + dt if t_new is None else float(t_new)
        self.step_index += 1
        self._check_blowup()

    def state(self) -> SimState:
        u = Field(self.grid, self.u_values)
        p = from_spectral(self.v * self._p_sym, self.grid)
        return SimState(self.t, u, p, self.step_index)


def step(state: SimState, config: SolverConfig, flux: FluxModel, dt: float) -> SimState:
    """Advance one ETDRK4 step from ``state``."""
    sim = Simulation(state.u, config, flux, t0=state.t)
    sim.step_index = state.step_index
    sim.advance(dt)
    return sim.state()


def time_grid(config: SolverConfig) -> tuple[int, float] | None:
    """Number of equal steps and their size for a fixed-dt config, else None.

    A fixed dt is shrunk so that an integer number of equal steps lands
    exactly on t_end.
    """
    if config.dt == "auto":
        return None
    n = max(1, math.ceil(config.t_end / float(config.dt) - 1e-9))
    return n, config.t_end / n


def march(sims: Sequence[Simulation], config: SolverConfig,
          on_record: Callable[[], None]) -> None:
    """Advance simulations in lockstep to ``config.t_end`` with a shared dt.

    With an automatic step the smallest suggestion among ``sims`` is used.
    ``on_record`` fires every ``record_every`` steps and after the final one.
    """
    T = config.t_end
    every = int(config.record_every)
    plan = time_grid(config)

    def advance_all(dt, t_new=None):
        for sim in sims:
            sim.advance(dt, t_new)

    if plan is not None:
        n, h = plan
        for i in range(1, n + 1):
            t_new = T if i == n else i * h
            advance_all(t_new - sims[0].t, t_new)
            if i % every == 0 or i == n:
                on_record()
        return
    while sims[0].t < T:
        dt = min(sim.suggested_dt() for sim in sims)
        last = sims[0].t + dt >= T * (1.0 - 1e-14)
        if last:
            advance_all(T - sims[0].t, T)
        else:
            advance_all(dt)
        if sims[0].step_index % every == 0 or last:
            on_record()


def run(u0: Field, config: SolverConfig, flux: FluxModel,
        observers: Iterable[Callable[[SimState], None]] = (),
        forcing: Forcing | None = None) -> tuple[SimState, DiagnosticsReport]:
    """Integrate from u0 to config.t_end, recording diagnostics.

    Observers (and the built-in recorder) see the state at t = 0, every
    ``record_every`` steps and at the final time. BlowUp propagates with the
    time of failure.
    """
    recorder = Recorder(config.gamma, config.delta, flux.name)
    hooks = [recorder, *observers]
    sim = Simulation(u0, config, flux, forcing)
    latest = []

    def notify():
        state = sim.state()
        for hook in hooks:
            hook(state)
        latest[:] = [state]

    notify()
    march([sim], config, notify)
    return latest[0], recorder.report(u0.grid)
