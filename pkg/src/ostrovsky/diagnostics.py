"""Monitored quantities of a run and the bound checks evaluated on them.

Every check is a pure function of a :class:`DiagnosticsReport`, so stored
reports can be re-checked and reproduce the same verdicts.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import (Field, GridSpec, derivative, inner_product, l2_norm, linf_norm,
                   mean, tail_fraction)
from .verdict import Verdict

_TINY = 1e-300

MEAN_TOL = 1e-12
ENERGY_TOL = 1e-6
AUGMENTED_ENERGY_TOL = 1e-5
P_BOUND_TOL = 1e-8
LINF_SLACK = 1e-6
TAIL_TOL = 1e-6
IDENTITY_TOL = 1e-10

COLUMNS = (
    "time", "u_l2sq", "ux_l2sq", "uxx_l2sq", "u_linf", "p_l2", "p_linf", "px_l2",
    "u_mean", "p_mean", "identity_residual", "coupling_residual",
    "px_linf", "ux_linf", "uxxx_l2sq", "tail_fraction",
)


@dataclass(frozen=True)
class DiagnosticsReport:
    """Time series recorded during one run, in CSV column order."""

    time: np.ndarray
    u_l2sq: np.ndarray
    ux_l2sq: np.ndarray
    uxx_l2sq: np.ndarray
    u_linf: np.ndarray
    p_l2: np.ndarray
    p_linf: np.ndarray
    px_l2: np.ndarray
    u_mean: np.ndarray
    p_mean: np.ndarray
    identity_residual: np.ndarray
    coupling_residual: np.ndarray
    px_linf: np.ndarray
    ux_linf: np.ndarray
    uxxx_l2sq: np.ndarray
    tail_fraction: np.ndarray
    gamma: float = 0.0
    delta: float = 0.0
    flux: str = ""
    L: float = 0.0
    N: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.time

    def __len__(self):
        return len(self.time)

    @property
    def u0_l2(self) -> float:
        return float(np.sqrt(self.u_l2sq[0]))

    @property
    def u0_linf(self) -> float:
        return float(self.u_linf[0])

    @property
    def sup_p_linf(self) -> float:
        """sup of |P|_inf over the recorded window (0, T) x R."""
        return float(np.max(self.p_linf))

    @property
    def sup_ux_linf(self) -> float:
        return float(np.max(self.ux_linf))

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def with_column(self, name: str, values) -> DiagnosticsReport:
        return replace(self, **{name: np.asarray(values, dtype=float)})

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for i in range(len(self)):
                w.writerow(format(float(self.column(c)[i]), ".17g") for c in COLUMNS)

    @classmethod
    def from_csv(cls, path, **meta) -> DiagnosticsReport:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected columns in {path}: {header}")
        data = np.array(body, dtype=float).reshape(len(body), len(COLUMNS))
        return cls(**{c: data[:, i] for i, c in enumerate(COLUMNS)}, **meta)


class Recorder:
    """Observer that appends one row of diagnostics per call."""

    def __init__(self, gamma: float, delta: float, flux_name: str = ""):
        self.gamma = gamma
        self.delta = delta
        self.flux_name = flux_name
        self.rows: list[tuple[float, ...]] = []

    def __call__(self, state):
        self.rows.append(measure(state.t, state.u, state.p, self.delta))

    def report(self, grid: GridSpec) -> DiagnosticsReport:
        data = np.array(self.rows, dtype=float).reshape(len(self.rows), len(COLUMNS))
        return DiagnosticsReport(
            **{c: data[:, i] for i, c in enumerate(COLUMNS)},
            gamma=self.gamma, delta=self.delta, flux=self.flux_name,
            L=grid.L, N=grid.N)


def measure(t: float, u: Field, p: Field, delta: float) -> tuple[float, ...]:
    ux = derivative(u, 1)
    uxx = derivative(u, 2)
    uxxx = derivative(u, 3)
    px = derivative(p, 1)
    pxx = derivative(p, 2)
    u_l2sq = l2_norm(u) ** 2
    px_l2sq = l2_norm(px) ** 2
    denom = max(u_l2sq, _TINY)
    identity = abs(delta ** 2 * l2_norm(pxx) ** 2 + px_l2sq - u_l2sq) / denom
    coupling = abs(inner_product(u, p) - delta * px_l2sq) / denom
    return (
        float(t), u_l2sq, l2_norm(ux) ** 2, l2_norm(uxx) ** 2, linf_norm(u),
        l2_norm(p), linf_norm(p), np.sqrt(px_l2sq), mean(u), mean(p),
        identity, coupling, linf_norm(px), linf_norm(ux), l2_norm(uxxx) ** 2,
        tail_fraction(u.spectral(), u.grid),
    )


# --- helpers -------------------------------------------------------------------

def cumulative_trapezoid(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y, dtype=float)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


def _worst(margin: np.ndarray, times: np.ndarray) -> tuple[float, float]:
    i = int(np.argmin(margin))
    return float(margin[i]), float(times[i])


def dissipation_integral(report: DiagnosticsReport, gamma: float) -> np.ndarray:
    """int_0^t exp(-2 gamma s) |u_x(s)|^2 ds by the trapezoid rule."""
    t = report.time
    return cumulative_trapezoid(t, np.exp(-2.0 * gamma * t) * report.ux_l2sq)


def time_integrals(report: DiagnosticsReport, gamma: float | None = None) -> dict:
    """Time integrals reported by the energy and regularity monitors."""
    gamma = report.gamma if gamma is None else gamma
    t = report.time
    return {
        "weighted_ux_l2sq": float(dissipation_integral(report, gamma)[-1]),
        "uxx_l2sq": float(cumulative_trapezoid(t, report.uxx_l2sq)[-1]),
        "uxxx_l2sq": float(cumulative_trapezoid(t, report.uxxx_l2sq)[-1]),
    }


# --- checks --------------------------------------------------------------------

def mean_conservation_check(report: DiagnosticsReport) -> Verdict:
    tol = MEAN_TOL * (report.u0_linf + 1.0)
    drift = np.abs(report.u_mean)
    margin, when = _worst(tol - drift, report.time)
    return Verdict("mean_conservation", bool(np.all(drift <= tol)), margin, when,
                   {"worst_abs_mean": float(drift.max()), "tolerance": tol})


def energy_bound_check(report: DiagnosticsReport, gamma: float) -> Verdict:
    """Gronwall bound on |u|^2, plain and with the accumulated dissipation."""
    t = report.time
    growth = np.exp(2.0 * gamma * t)
    u0sq = report.u_l2sq[0]
    plain_bound = growth * u0sq * (1.0 + ENERGY_TOL)
    plain_ok = report.u_l2sq <= plain_bound
    augmented = report.u_l2sq + 2.0 * growth * dissipation_integral(report, gamma)
    aug_bound = growth * u0sq * (1.0 + AUGMENTED_ENERGY_TOL)
    aug_ok = augmented <= aug_bound
    scale = np.maximum(growth * u0sq, _TINY)
    rel_margin = np.minimum(plain_bound - report.u_l2sq, aug_bound - augmented) / scale
    margin, when = _worst(rel_margin, t)
    return Verdict(
        "energy_bound", bool(plain_ok.all() and aug_ok.all()), margin, when,
        {"plain_passed": bool(plain_ok.all()), "augmented_passed": bool(aug_ok.all()),
         "max_plain_ratio": float(np.max(report.u_l2sq / scale)),
         "max_augmented_ratio": float(np.max(augmented / scale))})


def p_bounds_check(report: DiagnosticsReport, gamma: float, u0_l2: float) -> Verdict:
    """|P_x|_2 and sqrt(delta)|P_x|_inf under exp(gamma t)|u0|_2; reports C(T)."""
    t = report.time
    bound = np.exp(gamma * t) * u0_l2 * (1.0 + P_BOUND_TOL)
    sup_grad = np.sqrt(report.delta) * report.px_linf
    ok_l2 = report.px_l2 <= bound
    ok_sup = sup_grad <= bound
    margin, when = _worst(np.minimum(bound - report.px_l2, bound - sup_grad), t)
    return Verdict(
        "p_bounds", bool(ok_l2.all() and ok_sup.all()), margin, when,
        {"measured_sup_p_linf": report.sup_p_linf,
         "measured_sup_p_l2": float(np.max(report.p_l2)),
         "sup_sqrt_delta_px_linf": float(np.max(sup_grad))})


def linf_bound_check(report: DiagnosticsReport, gamma: float, u0_linf: float) -> Verdict:
    """|u(t)|_inf <= |u0|_inf + gamma * C * t with C the measured sup |P|_inf."""
    t = report.time
    c_t = report.sup_p_linf
    bound = u0_linf + gamma * c_t * t + LINF_SLACK
    margin, when = _worst(bound - report.u_linf, t)
    return Verdict("linf_bound", bool(np.all(report.u_linf <= bound)), margin, when,
                   {"measured_C_T": c_t})


def regularity_monitor(report: DiagnosticsReport) -> Verdict:
    """Finiteness of the smoothness norms and resolution adequacy (tail energy)."""
    t = report.time
    summary = {
        "sup_ux_l2sq": float(np.max(report.ux_l2sq)),
        "int_uxx_l2sq": float(cumulative_trapezoid(t, report.uxx_l2sq)[-1]),
        "sup_uxx_l2sq": float(np.max(report.uxx_l2sq)),
        "int_uxxx_l2sq": float(cumulative_trapezoid(t, report.uxxx_l2sq)[-1]),
        "max_tail_fraction": float(np.max(report.tail_fraction)),
    }
    finite = all(np.isfinite(v) for v in summary.values())
    margin, when = _worst(TAIL_TOL - report.tail_fraction, t)
    passed = finite and summary["max_tail_fraction"] <= TAIL_TOL
    return Verdict("regularity", bool(passed), margin, when, summary)


def identity_residual_series(report: DiagnosticsReport) -> Verdict:
    worst = np.maximum(report.identity_residual, report.coupling_residual)
    margin, when = _worst(IDENTITY_TOL - worst, report.time)
    return Verdict(
        "identity_residuals", bool(np.all(worst <= IDENTITY_TOL)), margin, when,
        {"max_identity_residual": float(np.max(report.identity_residual)),
         "max_coupling_residual": float(np.max(report.coupling_residual))})


def all_checks(report: DiagnosticsReport) -> list[Verdict]:
    g = report.gamma
    return [
        mean_conservation_check(report),
        energy_bound_check(report, g),
        p_bounds_check(report, g, report.u0_l2),
        linf_bound_check(report, g, report.u0_linf),
        regularity_monitor(report),
        identity_residual_series(report),
    ]


def summary_document(report: DiagnosticsReport, verdicts: list[Verdict],
                     extra: dict | None = None) -> dict:
    doc = {
        "parameters": {"gamma": report.gamma, "delta": report.delta, "flux": report.flux,
                       "L": report.L, "N": report.N},
        "records": len(report),
        "t_final": float(report.time[-1]),
        "measured": {
            "u0_l2": report.u0_l2, "u0_linf": report.u0_linf,
            "sup_p_linf": report.sup_p_linf, "sup_ux_linf": report.sup_ux_linf,
            **time_integrals(report),
        },
        "verdicts": [v.as_dict() for v in verdicts],
        "passed": all(v.passed for v in verdicts),
    }
    if extra:
        doc.update(extra)
    return doc


def _strict(obj):
    # NaN and infinities are not JSON; write them as null
    if isinstance(obj, float):
        return obj if np.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _strict(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_strict(v) for v in obj]
    if isinstance(obj, np.generic):
        return _strict(obj.item())
    return obj


def write_json(doc: dict, path):
    with open(path, "w") as fh:
        json.dump(_strict(doc), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")

