"""Integrating-factor RK4 time stepping for the fractionally dissipative MHD system.

Two formulations share the stepper:

* ``full``: the original unknowns (u, b);
* ``perturbation``: (v, c) = (u - U, b - B) around the closed-form
  background, with the forcings f, h and the source g supplied analytically.

The quadratic terms are evaluated in flux form, a.grad w = div(w (x) a),
which agrees with the advective form for solenoidal a and needs one forward
transform per independent tensor component.  The diagonal dissipation
mu |xi|^alpha, nu |xi|^beta is integrated exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np

from .background import BackgroundState
from .diagnostics.io import write_snapshot
from .diagnostics.norms import linf_norm
from .diagnostics.records import RecordContext
from .initial_data import DataSpec, build_data
from .spectral import (
    DomainSpec,
    SpectralField,
    _leray,
    _to_physical,
    _to_spectral,
    apply_radial_multiplier,
    differentiate,
    fractional_power,
    inverse_laplacian,
    multiply_dealiased,
)

__all__ = [
    "SolverConfig",
    "FlowState",
    "Trajectory",
    "BlowUpError",
    "dissipation_rates",
    "nonlinear_full",
    "nonlinear_perturbation",
    "rhs_full",
    "rhs_perturbation",
    "step",
    "cfl_dt",
    "pressure",
    "initial_state",
    "integrate",
    "run",
]

log = logging.getLogger(__name__)

FORMULATIONS = ("full", "perturbation")


@dataclass(frozen=True)
class SolverConfig:
    """Time integration controls.

    ``dt`` fixes the step; when it is ``None`` the CFL rule with
    ``cfl_safety`` and cap ``dt_max`` is used.
    """

    alpha: float = 1.0
    beta: float = 1.0
    mu: float = 1.0
    nu: float = 1.0
    formulation: str = "perturbation"
    t_end: float = 1.0
    dt: float | None = None
    cfl_safety: float = 0.5
    dt_max: float = 0.05
    record_every: float = 0.5
    blowup_factor: float = 1e6

    def __post_init__(self):
        for name in ("alpha", "beta"):
            if not 0 <= getattr(self, name) <= 2:
                raise ValueError(f"{name} must lie in [0, 2], got {getattr(self, name)}")
        if not (self.mu > 0 and self.nu > 0):
            raise ValueError("mu and nu must be positive")
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if not self.dt_max > 0 or not self.record_every > 0:
            raise ValueError("dt_max and record_every must be positive")


@dataclass(frozen=True)
class FlowState:
    """Time plus the two evolved fields: (u, b) or (v, c) depending on formulation."""

    t: float
    u: SpectralField
    b: SpectralField


class BlowUpError(RuntimeError):
    def __init__(self, t: float, reason: str, state: FlowState | None = None):
        super().__init__(f"blow-up at t = {t:.6g}: {reason}")
        self.t = t
        self.state = state


Tendency = Callable[[float, np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def dissipation_rates(domain: DomainSpec, cfg: SolverConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-mode decay rates mu |xi|^alpha and nu |xi|^beta."""
    lu = cfg.mu * fractional_power(cfg.alpha).values(domain)
    lb = cfg.nu * fractional_power(cfg.beta).values(domain)
    return lu, lb


# -- flux-form quadratic terms -------------------------------------------------


def _batch_spectral(T: dict, d: DomainSpec) -> dict:
    keys = list(T)
    hat = _to_spectral(np.stack([T[k] for k in keys]), d)
    return dict(zip(keys, hat))


def _div_symmetric(T: dict, d: DomainSpec, ik: list) -> np.ndarray:
    """sum_j d_j T_ij for a symmetric tensor given by its upper triangle."""
    hat = _batch_spectral(T, d)
    out = np.zeros((d.dim,) + d.spectral_shape, dtype=complex)
    for i in range(d.dim):
        for j in range(d.dim):
            out[i] += ik[j] * hat[(min(i, j), max(i, j))]
    return out


def _div_antisymmetric(T: dict, d: DomainSpec, ik: list) -> np.ndarray:
    """sum_j d_j T_ij for an antisymmetric tensor given by T_ij, i < j."""
    hat = _batch_spectral(T, d)
    out = np.zeros((d.dim,) + d.spectral_shape, dtype=complex)
    for (i, j), val in hat.items():
        out[i] += ik[j] * val
        out[j] -= ik[i] * val
    return out


def _pairs(d: DomainSpec, strict: bool):
    return [(i, j) for i in range(d.dim) for j in range(i + (1 if strict else 0), d.dim)]


class _Kernels:
    """Cached arrays for one domain."""

    def __init__(self, domain: DomainSpec):
        self.d = domain
        self.mask = domain.dealias_mask
        self.ik = [1j * x * domain.nyquist_free for x in domain.xi]
        self.sym = _pairs(domain, strict=False)
        self.anti = _pairs(domain, strict=True)

    def phys(self, c: np.ndarray) -> np.ndarray:
        return _to_physical(c * self.mask, self.d)

    def finish(self, c: np.ndarray) -> np.ndarray:
        return _leray(c, self.d) * self.mask


def nonlinear_full(domain: DomainSpec) -> Tendency:
    """Non-dissipative tendency of the full system:

    du = P(-u.grad u + b.grad b),  db = P(-u.grad b + b.grad u).
    """
    k = _Kernels(domain)

    def tendency(t, u, b):
        up, bp = k.phys(u), k.phys(b)
        S = {(i, j): bp[i] * bp[j] - up[i] * up[j] for i, j in k.sym}
        A = {(i, j): bp[j] * up[i] - up[j] * bp[i] for i, j in k.anti}
        return k.finish(_div_symmetric(S, domain, k.ik)), k.finish(_div_antisymmetric(A, domain, k.ik))

    return tendency


def nonlinear_perturbation(bg: BackgroundState) -> Tendency:
    """Non-dissipative tendency of the perturbation system around ``bg``.

    v-equation: -v.grad v + c.grad c + B.grad c + c.grad B - v.grad U - U.grad v + g - f
    c-equation: -v.grad c + c.grad v + B.grad v + c.grad U - v.grad B - U.grad c - h

    The forcings enter with a minus sign: U solves dU/dt + mu Lambda^alpha U = f,
    so subtracting its equation from the one for u = U + v leaves -f.
    """
    d = bg.domain
    k = _Kernels(d)
    U0p = k.phys(bg.U0.coeffs)
    g0 = bg.U0_advection.coeffs
    fU, fB = (s.coeffs for s in bg.forcing_shapes)
    mu, nu = bg.mu, bg.nu

    def tendency(t, v, c):
        eU, eB = math.exp(-mu * t), math.exp(-nu * t)
        U, B = eU * U0p, eB * U0p
        vp, cp = k.phys(v), k.phys(c)
        # T_ij = a_j w_i for each term a.grad w
        S = {
            (i, j): -vp[j] * vp[i] + cp[j] * cp[i]
            + B[j] * cp[i] + cp[j] * B[i]
            - vp[j] * U[i] - U[j] * vp[i]
            for i, j in k.sym
        }
        A = {
            (i, j): -vp[j] * cp[i] + cp[j] * vp[i]
            + B[j] * vp[i] + cp[j] * U[i]
            - vp[j] * B[i] - U[j] * cp[i]
            for i, j in k.anti
        }
        dv = _div_symmetric(S, d, k.ik) + (eB * eB - eU * eU) * g0 - (mu * eU) * fU
        dc = _div_antisymmetric(A, d, k.ik) - (nu * eB) * fB
        return k.finish(dv), k.finish(dc)

    return tendency


def _with_dissipation(state: FlowState, cfg: SolverConfig, tendency: Tendency):
    d = state.u.domain
    lu, lb = dissipation_rates(d, cfg)
    du, db = tendency(state.t, state.u.coeffs, state.b.coeffs)
    return SpectralField(d, du - lu * state.u.coeffs), SpectralField(d, db - lb * state.b.coeffs)


def _check_solenoidal(state: FlowState, tol: float = 1e-8):
    for name, F in (("u", state.u), ("b", state.b)):
        div = differentiate(F, "divergence")
        scale = float(np.max(np.abs(F.coeffs), initial=0.0))
        if float(np.max(np.abs(div.coeffs), initial=0.0)) > tol * max(scale, 1e-300):
            raise ValueError(f"{name} is not solenoidal")


def rhs_full(state: FlowState, cfg: SolverConfig) -> tuple[SpectralField, SpectralField]:
    """Complete right-hand side of the full system, dissipation included."""
    _check_solenoidal(state)
    return _with_dissipation(state, cfg, nonlinear_full(state.u.domain))


def rhs_perturbation(state: FlowState, bg: BackgroundState, cfg: SolverConfig) -> tuple[SpectralField, SpectralField]:
    """Complete right-hand side of the perturbation system, dissipation included."""
    if bg.domain != state.u.domain:
        raise ValueError("background and state live on different domains")
    _check_solenoidal(state)
    return _with_dissipation(state, cfg, nonlinear_perturbation(bg))


# -- stepping --------------------------------------------------------------------


def _symmetrize(c: np.ndarray, d: DomainSpec) -> np.ndarray:
    plane_axes = tuple(range(1, d.dim))
    for kl in (0, d.N // 2):
        plane = c[..., kl]
        mirrored = np.roll(np.flip(plane, axis=plane_axes), 1, axis=plane_axes)
        c[..., kl] = 0.5 * (plane + np.conj(mirrored))
    return c


@lru_cache(maxsize=16)
def _decay_factors(d: DomainSpec, alpha: float, beta: float, mu: float, nu: float, dt: float):
    cfg = SolverConfig(alpha=alpha, beta=beta, mu=mu, nu=nu)
    lu, lb = dissipation_rates(d, cfg)
    return np.exp(-lu * dt), np.exp(-lb * dt), np.exp(-lu * dt / 2), np.exp(-lb * dt / 2)


def step(state: FlowState, tendency: Tendency, dt: float, cfg: SolverConfig) -> FlowState:
    """One integrating-factor RK4 step of size ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    d = state.u.domain
    Eu, Eb, Hu, Hb = _decay_factors(d, cfg.alpha, cfg.beta, cfg.mu, cfg.nu, float(dt))
    t, u, b = state.t, state.u.coeffs, state.b.coeffs

    k1u, k1b = tendency(t, u, b)
    k2u, k2b = tendency(t + dt / 2, Hu * (u + dt / 2 * k1u), Hb * (b + dt / 2 * k1b))
    k3u, k3b = tendency(t + dt / 2, Hu * u + dt / 2 * k2u, Hb * b + dt / 2 * k2b)
    k4u, k4b = tendency(t + dt, Eu * u + dt * Hu * k3u, Eb * b + dt * Hb * k3b)
    un = Eu * u + dt / 6 * (Eu * k1u + 2 * Hu * (k2u + k3u) + k4u)
    bn = Eb * b + dt / 6 * (Eb * k1b + 2 * Hb * (k2b + k3b) + k4b)

    if not (np.all(np.isfinite(un)) and np.all(np.isfinite(bn))):
        raise BlowUpError(t + dt, "non-finite coefficient", state)
    mask = d.dealias_mask
    un = _symmetrize(_leray(un, d) * mask, d)
    bn = _symmetrize(_leray(bn, d) * mask, d)
    return FlowState(t + dt, SpectralField(d, un), SpectralField(d, bn))


def physical_speeds(state: FlowState, cfg: SolverConfig, bg: BackgroundState | None = None) -> tuple[float, float]:
    """(||u||_inf, ||b||_inf) of the physical fields (background added back if needed)."""
    u, b = state.u, state.b
    if cfg.formulation == "perturbation" and bg is not None:
        u = u + bg.decay_U(state.t) * bg.U0
        b = b + bg.decay_B(state.t) * bg.U0
    return linf_norm(u), linf_norm(b)


def cfl_dt(state: FlowState, cfg: SolverConfig, bg: BackgroundState | None = None, floor: float = 1e-12) -> float:
    """safety * dx / (||u||_inf + ||b||_inf + floor), capped at ``cfg.dt_max``."""
    su, sb = physical_speeds(state, cfg, bg)
    dx = state.u.domain.grid_spacing
    return min(cfg.dt_max, cfg.cfl_safety * dx / (su + sb + floor))


def pressure(state: FlowState, cfg: SolverConfig) -> SpectralField:
    """Pressure of the full system, Delta^-1 div(-u.grad u + b.grad b)."""
    u, b = state.u, state.b
    N = multiply_dealiased(b, b, "advection") - multiply_dealiased(u, u, "advection")
    return apply_radial_multiplier(differentiate(N, "divergence"), inverse_laplacian())


# -- driver ------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Emitted records plus the final state and the background used."""

    records: list = field(default_factory=list)
    final: FlowState | None = None
    background: BackgroundState | None = None
    formulation: str = "perturbation"
    steps: int = 0
    dt_history: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def physical_fields(self, state: FlowState | None = None) -> tuple[SpectralField, SpectralField]:
        """(u, b) at ``state`` (default: final), reconstructing u = U + v, b = B + c if needed."""
        state = state or self.final
        if self.formulation == "full":
            return state.u, state.b
        bg = self.background
        return state.u + bg.decay_U(state.t) * bg.U0, state.b + bg.decay_B(state.t) * bg.U0


def initial_state(cfg: SolverConfig, u0: SpectralField, b0: SpectralField, U0: SpectralField) -> tuple[FlowState, BackgroundState]:
    bg = BackgroundState(U0, cfg.mu, cfg.nu, cfg.alpha, cfg.beta)
    if cfg.formulation == "full":
        return FlowState(0.0, u0, b0), bg
    return FlowState(0.0, u0 - U0, b0 - U0), bg


def integrate(
    state: FlowState,
    bg: BackgroundState,
    cfg: SolverConfig,
    record: Callable[[FlowState], object] | None = None,
) -> Trajectory:
    """Advance ``state`` to ``cfg.t_end``, calling ``record`` on the record grid."""
    tendency = nonlinear_full(bg.domain) if cfg.formulation == "full" else nonlinear_perturbation(bg)
    traj = Trajectory(background=bg, formulation=cfg.formulation)
    if record is None:
        record = RecordContext(bg, cfg, tendency)
    traj.records.append(record(state))
    su, sb = physical_speeds(state, cfg, bg)
    speed0 = su + sb
    n_records = 1
    next_record = cfg.record_every
    tiny = 1e-12 * max(cfg.t_end, 1.0)
    while state.t < cfg.t_end - tiny:
        if cfg.dt is not None:
            dt = cfg.dt
        else:
            dt = cfl_dt(state, cfg, bg)
        dt = min(dt, next_record - state.t, cfg.t_end - state.t)
        state = step(state, tendency, dt, cfg)
        traj.steps += 1
        traj.dt_history.append(dt)
        if state.t >= next_record - tiny or state.t >= cfg.t_end - tiny:
            # snap to the record grid to keep times reproducible
            target = min(next_record, cfg.t_end)
            state = replace(state, t=target if abs(state.t - target) <= tiny else state.t)
            su, sb = physical_speeds(state, cfg, bg)
            if speed0 > 0 and su + sb > cfg.blowup_factor * speed0:
                raise BlowUpError(state.t, f"sup norm grew by more than {cfg.blowup_factor:g}x", state)
            traj.records.append(record(state))
            n_records += 1
            next_record = cfg.record_every * n_records
    traj.final = state
    return traj


def run(
    cfg: SolverConfig,
    data: DataSpec,
    domain: DomainSpec,
    eta: float = math.inf,
    dump_dir: str | Path | None = None,
) -> Trajectory:
    """Build the data, integrate to ``cfg.t_end`` and return the record trajectory."""
    u0, b0, U0 = build_data(data, domain)
    state, bg = initial_state(cfg, u0, b0, U0)
    tendency = nonlinear_full(domain) if cfg.formulation == "full" else nonlinear_perturbation(bg)
    ctx = RecordContext(bg, cfg, tendency, epsilon=data.epsilon, eta=eta)
    try:
        return integrate(state, bg, cfg, record=ctx)
    except BlowUpError as err:
        if dump_dir is not None and err.state is not None:
            out = Path(dump_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_snapshot(err.state.u, out / f"blowup_u_t{err.t:.6g}.mhdf")
            write_snapshot(err.state.b, out / f"blowup_b_t{err.t:.6g}.mhdf")
        log.error("%s", err)
        raise


def integrate_background(bg: BackgroundState, dt: float, t_end: float) -> FlowState:
    """March the forced linear system dU/dt + mu Lambda^alpha U = f (and B with h) numerically.

    The exact solution is (exp(-mu t) U0, exp(-nu t) U0); comparing against it
    measures the stepper's time-discretization error.
    """
    cfg = SolverConfig(alpha=bg.alpha, beta=bg.beta, mu=bg.mu, nu=bg.nu, t_end=t_end, dt=dt)
    fU, fB = (s.coeffs for s in bg.forcing_shapes)

    def forcing(t, u, b):
        return (bg.mu * math.exp(-bg.mu * t)) * fU, (bg.nu * math.exp(-bg.nu * t)) * fB

    state = FlowState(0.0, bg.U0, bg.U0)
    n = max(1, round(t_end / dt))
    h = t_end / n
    for _ in range(n):
        state = step(state, forcing, h, cfg)
    return state
