"""Bound checks on the background, bootstrap monitoring and energy bookkeeping.

The lemma constants are never quantified, so every check measures a ratio
and compares it to an order-one envelope (default 10) together with the
expected t- or eps-scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..background import BackgroundState, background_at, forcing_terms, self_remainder
from .norms import derivative_linf, sobolev_norm

__all__ = [
    "ENVELOPE",
    "CheckReport",
    "lemma33_check",
    "bernstein_check",
    "bootstrap_monitor",
    "BootstrapReport",
    "energy_balance",
    "EnergyReport",
]

ENVELOPE = 10.0


@dataclass
class CheckReport:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed


def _growth(values) -> float:
    """Largest relative increase over the first entry; 0 for a non-increasing or all-zero sequence."""
    arr = np.asarray(values, dtype=float)
    if arr[0] <= 0:
        return 0.0 if not arr.any() else math.inf
    return max(0.0, float(arr.max() / arr[0] - 1.0))


def lemma33_check(
    bg: BackgroundState,
    t_samples,
    epsilon: float,
    envelope: float = ENVELOPE,
    max_growth: float = 0.2,
) -> CheckReport:
    """Forcing and remainder bounds measured directly at each sample time.

    Ratios reported per t:

    * f: ||f||_H3 / (e^{-min(mu,nu) t} eps ||U0||_L2), likewise h
    * G: (||R(U)||_H3 + ||R(B)||_H3) / (e^{-2 min(mu,nu) t} eps ||U0||_L2 ||U0^||_L1)
      where R(W) is the non-gradient part of W.grad W and G = R(B) - R(U).

    The bounds hold uniformly in t exactly when no ratio grows past its
    value at the first sample; with mu = nu every ratio is constant in t.
    """
    l2, l1 = bg.U0_l2, bg.U0_l1hat
    rows = []
    for t in t_samples:
        f, h = forcing_terms(bg, t)
        U, B = background_at(bg, t)
        emin = math.exp(-min(bg.mu, bg.nu) * t)
        den1 = emin * epsilon * l2
        den2 = emin**2 * epsilon * l2 * l1
        pieces = sobolev_norm(self_remainder(U), 3) + sobolev_norm(self_remainder(B), 3)
        rows.append({
            "t": float(t),
            "ratio_f": sobolev_norm(f, 3) / den1 if den1 else 0.0,
            "ratio_h": sobolev_norm(h, 3) / den1 if den1 else 0.0,
            "ratio_G": pieces / den2 if den2 else 0.0,
            "h3_G": sobolev_norm(self_remainder(B) - self_remainder(U), 3),
        })
    keys = ("ratio_f", "ratio_h", "ratio_G")
    worst = {k: max(r[k] for r in rows) for k in keys}
    growth = {k: _growth([r[k] for r in rows]) for k in keys}
    passed = all(worst[k] <= envelope for k in keys) and all(growth[k] <= max_growth for k in keys)
    return CheckReport("lemma33", passed, {"rows": rows, "max": worst, "growth": growth, "envelope": envelope})


def bernstein_check(bg: BackgroundState, t: float, envelope: float = ENVELOPE) -> CheckReport:
    """(||grad W||_inf + ||grad^4 W||_inf) / (e^{-rate t} ||U0^||_L1) for W = U and B."""
    U, B = background_at(bg, t)
    l1 = bg.U0_l1hat
    out = {}
    for name, W, rate in (("U", U, bg.mu), ("B", B, bg.nu)):
        num = derivative_linf(W, 1) + derivative_linf(W, 4)
        den = math.exp(-rate * t) * l1
        out[name] = num / den if den else 0.0
    return CheckReport("bernstein", all(v <= envelope for v in out.values()), {"t": t, **out, "envelope": envelope})


@dataclass
class BootstrapReport:
    sup: float
    eta: float
    crossing_time: float | None
    passed: bool


def bootstrap_monitor(trajectory, eta: float) -> BootstrapReport:
    """sup over records of ||v||_H3^2 + ||c||_H3^2 against the threshold eta."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    records = list(trajectory)
    if not records:
        raise ValueError("empty trajectory")
    sup, crossing = 0.0, None
    for rec in records:
        g = rec.h3_v**2 + rec.h3_c**2
        sup = max(sup, g)
        if crossing is None and g > eta:
            crossing = rec.t
    return BootstrapReport(sup, eta, crossing, crossing is None)


@dataclass
class EnergyReport:
    max_relative_error: float
    cumulative_relative_error: float
    intervals: int
    passed: bool
    tolerance: float


def energy_balance(trajectory, tolerance: float = 1e-3) -> EnergyReport:
    """Compare each interval's energy change with the trapezoid integral of source - dissipation.

    Errors are relative to the integrated gross flux |source| + dissipation,
    so an interval where nothing happens counts as exact.
    """
    recs = list(trajectory)
    if len(recs) < 2:
        return EnergyReport(0.0, 0.0, 0, True, tolerance)
    t = np.array([r.t for r in recs])
    E = np.array([r.l2_energy for r in recs])
    net = np.array([r.source_rate - r.dissipation_rate for r in recs])
    gross = np.array([abs(r.source_rate) + r.dissipation_rate for r in recs])
    dt = np.diff(t)
    dE = np.diff(E)
    Q = 0.5 * dt * (net[1:] + net[:-1])
    scale = 0.5 * dt * (gross[1:] + gross[:-1])
    err = np.abs(dE - Q)
    rel = np.divide(err, scale, out=np.zeros_like(err), where=scale > 0)
    total_scale = float(scale.sum())
    cum = abs(float(E[-1] - E[0] - Q.sum())) / total_scale if total_scale > 0 else 0.0
    worst = float(rel.max(initial=0.0))
    return EnergyReport(worst, cum, len(dt), worst <= tolerance, tolerance)
