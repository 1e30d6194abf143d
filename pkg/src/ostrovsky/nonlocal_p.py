"""The nonlocal term P coupled to u by  -delta P'' + P' = u  (delta = 0: P' = u).

P is fixed by requiring zero spatial mean, which on the periodic domain is
the only freedom left once u has zero mean. The spectral solve divides
mode-by-mode; a banded finite-difference route is kept as an independent
cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NonZeroMean
from .grid import (Field, GridSpec, derivative, from_spectral, inner_product,
                   l2_norm, linf_norm, mean)
from .verdict import Verdict

_TINY = 1e-300
MEAN_TOLERANCE = 1e-10


def p_symbol(grid: GridSpec, delta: float) -> np.ndarray:
    """Multiplier 1 / (delta k^2 + i k) on rfft coefficients.

    The k = 0 entry is 0 (zero-mean P). The Nyquist entry is also 0: a real
    field cannot carry the complex response there.
    """
    k = grid.k
    denom = delta * k ** 2 + 1j * k
    sym = np.zeros_like(denom)
    sym[1:-1] = 1.0 / denom[1:-1]
    return sym


def check_zero_mean(u: Field):
    m = mean(u)
    if abs(m) > MEAN_TOLERANCE * (linf_norm(u) + 1.0):
        raise NonZeroMean(f"mean(u) = {m:.3e} exceeds the zero-mean tolerance")


def solve_p(u: Field, delta: float, backend: str = "spectral") -> Field:
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    check_zero_mean(u)
    if backend == "spectral":
        return from_spectral(u.spectral() * p_symbol(u.grid, delta), u.grid)
    if backend == "banded":
        return solve_p_banded(u, delta)
    raise ValueError(f"unknown backend {backend!r}")


def solve_p_banded(u: Field, delta: float) -> Field:
    """Second-order finite-difference route, independent of any transform.

    Integrates once with the trapezoid rule to U (zero mean), then solves
    -delta P' + P = U by a backward exponential sweep that is exact for
    piecewise-linear U. The sweep is a periodic bidiagonal system.
    """
    grid = u.grid
    U = kernels.cumulative_trapezoid(np.ascontiguousarray(u.values), grid.dx)
    U -= U.mean()
    if delta == 0.0:
        return Field(grid, U)
    h = grid.dx
    r = h / delta
    decay = np.exp(-r)
    one_minus = -np.expm1(-r)
    w1 = (delta * one_minus - h * decay) / h
    w0 = one_minus - w1
    s = w0 * U + w1 * np.roll(U, -1)
    P = kernels.periodic_backward_sweep(np.ascontiguousarray(s), decay)
    return Field(grid, P - P.mean())


@dataclass(frozen=True)
class EllipticSolveReport:
    identity_residual: float
    coupling_residual: float
    p_mean: float


def check_elliptic_identity(u: Field, p: Field, delta: float) -> float:
    """Relative defect of  delta^2 |P''|^2 + |P'|^2 = |u|^2."""
    lhs = delta ** 2 * l2_norm(derivative(p, 2)) ** 2 + l2_norm(derivative(p, 1)) ** 2
    rhs = l2_norm(u) ** 2
    return abs(lhs - rhs) / max(rhs, _TINY)


def coupling_product(u: Field, p: Field, delta: float) -> float:
    return inner_product(u, p)


def coupling_residual(u: Field, p: Field, delta: float) -> float:
    """Relative defect of  (u, P) = delta |P'|^2, scaled by |u|^2."""
    target = delta * l2_norm(derivative(p, 1)) ** 2
    return abs(inner_product(u, p) - target) / max(l2_norm(u) ** 2, _TINY)


def elliptic_report(u: Field, p: Field, delta: float) -> EllipticSolveReport:
    return EllipticSolveReport(
        identity_residual=check_elliptic_identity(u, p, delta),
        coupling_residual=coupling_residual(u, p, delta),
        p_mean=mean(p),
    )


def sup_gradient_bound_check(u: Field, p: Field, delta: float) -> Verdict:
    """sqrt(delta) max|P'| <= |u|_2, with a 1e-8 relative allowance."""
    if delta <= 0:
        raise ValueError("the sup-gradient bound needs delta > 0")
    lhs = np.sqrt(delta) * linf_norm(derivative(p, 1))
    bound = l2_norm(u)
    return Verdict(
        "sup_gradient_bound",
        passed=lhs <= bound * (1.0 + 1e-8),
        worst_margin=bound - lhs,
        details={"lhs": lhs, "bound": bound},
    )
