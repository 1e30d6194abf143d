"""Flux functions f(u) and checks of the structural hypotheses placed on them.

The evolution only requires f to be C^2 and subquadratic, |f'(u)| <= c0 |u|.
Both properties are checked by dense sampling on a declared range, since the
solution never leaves a bounded interval of values during a run.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DivergesAtZero

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FluxModel:
    name: str
    f: ArrayFn
    f_prime: ArrayFn
    f_second: ArrayFn
    c0: float
    validity_range: tuple[float, float] = (-np.inf, np.inf)


def burgers_flux() -> FluxModel:
    return FluxModel(
        name="burgers",
        f=lambda u: 0.5 * np.square(u),
        f_prime=lambda u: np.asarray(u, dtype=float) * 1.0,
        f_second=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        c0=1.0,
    )


def polynomial_flux(coefficients: Sequence[float], validity_range=(-2.0, 2.0),
                    name: str = "custom", samples: int = 2001) -> FluxModel:
    """Flux sum_n coefficients[n] * u**n, with c0 measured on ``validity_range``.

    Raises DivergesAtZero if the polynomial has a linear term.
    """
    p = Polynomial(np.asarray(coefficients, dtype=float))
    dp = p.deriv()
    ddp = dp.deriv()
    lo, hi = map(float, validity_range)
    provisional = FluxModel(name, p, dp, ddp, np.nan, (lo, hi))
    c0 = validate_subquadratic(provisional, (lo, hi), samples)
    return FluxModel(name, p, dp, ddp, c0, (lo, hi))


def cubic_flux(validity_range=(-2.0, 2.0)) -> FluxModel:
    return polynomial_flux([0.0, 0.0, 0.0, 1.0 / 3.0], validity_range, name="cubic")


def make_flux(name: str, coefficients: Sequence[float] | None = None,
              validity_range=(-2.0, 2.0)) -> FluxModel:
    """Look a flux up by registry name: ``burgers``, ``cubic`` or ``custom``."""
    if name == "burgers":
        return burgers_flux()
    if name == "cubic":
        return cubic_flux(validity_range)
    if name == "custom":
        if not coefficients:
            raise ValueError("custom flux needs a coefficient list")
        return polynomial_flux(coefficients, validity_range)
    raise ValueError(f"unknown flux {name!r}; expected burgers, cubic or custom")


def _probe_points(lo: float, hi: float, samples: int) -> np.ndarray:
    u = np.linspace(lo, hi, samples)
    scale = max(abs(lo), abs(hi))
    near_zero = scale * 10.0 ** -np.arange(1, 13)
    pts = np.concatenate([u, near_zero[near_zero <= hi], -near_zero[-near_zero >= lo]])
    return pts[pts != 0.0]


def validate_subquadratic(flux: FluxModel, range_: tuple[float, float],
                          samples: int = 2001) -> float:
    """Return sup |f'(u)|/|u| over sampled u != 0 in ``range_``.

    Besides the uniform samples, points approaching zero geometrically are
    probed; a ratio that keeps growing there means no finite c0 exists.
    """
    lo, hi = map(float, range_)
    if samples < 100:
        raise ValueError("need at least 100 samples")
    if not lo <= 0.0 <= hi or lo == hi:
        raise ValueError("range must contain 0 and have positive length")
    u = _probe_points(lo, hi, samples)
    ratio = np.abs(flux.f_prime(u)) / np.abs(u)
    if not np.all(np.isfinite(ratio)):
        raise DivergesAtZero(f"{flux.name}: |f'(u)|/|u| is not finite on the range")

    f0 = float(np.abs(flux.f_prime(np.array([0.0])))[0])
    fmax = float(np.max(np.abs(flux.f_prime(u))))
    if f0 > 1e-12 * max(fmax, 1.0):
        raise DivergesAtZero(f"{flux.name}: f'(0) = {f0:.3g} != 0")
    # geometric approach to zero from the wider side
    side = hi if hi >= -lo else lo
    approach = side * 10.0 ** -np.arange(1, 13)
    r = np.abs(flux.f_prime(approach)) / np.abs(approach)
    if r[-1] > 1e3 * max(r[0], 1.0) * (1.0 + 1e-9):
        raise DivergesAtZero(f"{flux.name}: |f'(u)|/|u| grows like {r[-1]:.3g} near 0")
    return float(np.max(ratio))


def genuine_nonlinearity_probe(flux: FluxModel, range_: tuple[float, float],
                               samples: int = 2001) -> float:
    """Fraction of sample points where f'' is numerically zero.

    Sampling cannot certify that {f''=0} has measure zero, so a positive
    fraction only triggers a warning.
    """
    lo, hi = map(float, range_)
    u = np.linspace(lo, hi, samples)
    fpp = np.abs(np.asarray(flux.f_second(u), dtype=float))
    threshold = 1e-9 * max(1.0, float(fpp.max()))
    fraction = float(np.mean(fpp <= threshold))
    if fraction > 0.0:
        warnings.warn(
            f"flux {flux.name!r}: f'' vanishes at {fraction:.3%} of sampled points",
            stacklevel=2)
    return fraction


def sup_abs_second(flux: FluxModel, lo: float, hi: float, samples: int = 1001) -> float:
    """max |f''| over [lo, hi], sampled."""
    if hi < lo:
        lo, hi = hi, lo
    u = np.linspace(lo, hi, samples)
    return float(np.max(np.abs(np.asarray(flux.f_second(u), dtype=float))))
