"""Per-sample diagnostics emitted along a run."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .norms import inner, l2_norm, sobolev_norm

__all__ = ["DiagnosticsRecord", "RecordContext", "RECORD_FIELDS", "support_epsilon", "dissipation"]


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    h3_v: float
    h3_c: float
    l2_energy: float
    dissipation_rate: float
    source_rate: float
    h3_f: float
    h3_h: float
    h3_G: float
    bernstein_ratio_U: float
    bernstein_ratio_B: float
    lemma33_ratio_f: float
    lemma33_ratio_G: float
    bootstrap_ok: bool

    @property
    def gamma(self) -> float:
        """||v||_H3^2 + ||c||_H3^2."""
        return self.h3_v**2 + self.h3_c**2

    def values(self) -> tuple:
        return astuple(self)


RECORD_FIELDS = tuple(f.name for f in fields(DiagnosticsRecord))


def support_epsilon(U0) -> float:
    """Half-width of the thinnest shell around |xi| = 1 holding the spectrum of U0."""
    mag = np.sqrt(np.sum(np.abs(U0.coeffs) ** 2, axis=0))
    if not mag.any():
        return 0.0
    r = U0.domain.xi_abs[mag > 0]
    return float(np.max(np.abs(r - 1.0)))


def dissipation(F, rate: float, power: float) -> float:
    """rate * ||Lambda^(power/2) F||_L2^2 (power = 0 is plain damping)."""
    d = F.domain
    sym = np.ones(d.spectral_shape) if power == 0 else d.xi_abs**power
    return rate * d.volume * float(np.sum(d.half_weights * sym * np.abs(F.coeffs) ** 2))


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


class RecordContext:
    """Callable turning a flow state into a :class:`DiagnosticsRecord`.

    Background quantities use the exact exponential scaling of U0, so the
    bound ratios cost nothing per record.
    """

    def __init__(self, bg, cfg, tendency, epsilon: float | None = None, eta: float = math.inf):
        self.bg = bg
        self.cfg = cfg
        self.tendency = tendency
        self.epsilon = support_epsilon(bg.U0) if epsilon is None else epsilon
        self.eta = eta
        fU, fB = bg.forcing_shapes
        self._f0 = sobolev_norm(fU, 3)
        self._h0 = sobolev_norm(fB, 3)
        self._R0 = sobolev_norm(bg.U0_remainder, 3)
        self._l2 = bg.U0_l2
        self._l1 = bg.U0_l1hat
        self._bern = _ratio(bg.U0_bernstein, self._l1)

    def __call__(self, state) -> DiagnosticsRecord:
        bg, cfg, t = self.bg, self.cfg, state.t
        eU, eB = bg.decay_U(t), bg.decay_B(t)
        if cfg.formulation == "full":
            v, c = state.u - eU * bg.U0, state.b - eB * bg.U0
        else:
            v, c = state.u, state.b
        h3_v, h3_c = sobolev_norm(v, 3), sobolev_norm(c, 3)
        energy = 0.5 * (l2_norm(state.u) ** 2 + l2_norm(state.b) ** 2)
        diss = dissipation(state.u, cfg.mu, cfg.alpha) + dissipation(state.b, cfg.nu, cfg.beta)
        du, db = self.tendency(t, state.u.coeffs, state.b.coeffs)
        src = inner(state.u, type(state.u)(state.u.domain, du)) + inner(state.b, type(state.b)(state.b.domain, db))
        h3_f = bg.mu * eU * self._f0
        h3_h = bg.nu * eB * self._h0
        h3_G = abs(eB * eB - eU * eU) * self._R0
        emin = math.exp(-min(bg.mu, bg.nu) * t)
        ratio_f = _ratio(h3_f, emin * self.epsilon * self._l2)
        ratio_G = _ratio((eU * eU + eB * eB) * self._R0, emin * emin * self.epsilon * self._l2 * self._l1)
        gamma = h3_v**2 + h3_c**2
        return DiagnosticsRecord(
            t=float(t),
            h3_v=h3_v,
            h3_c=h3_c,
            l2_energy=energy,
            dissipation_rate=diss,
            source_rate=src,
            h3_f=h3_f,
            h3_h=h3_h,
            h3_G=h3_G,
            bernstein_ratio_U=self._bern,
            bernstein_ratio_B=self._bern,
            lemma33_ratio_f=ratio_f,
            lemma33_ratio_G=ratio_G,
            bootstrap_ok=bool(gamma <= self.eta),
        )
