"""Closed-form damped background (U, B) = (exp(-mu t) U0, exp(-nu t) U0).

Besides the fields themselves this module evaluates the forcings
f = mu (Lambda^alpha - 1) U and h = nu (Lambda^beta - 1) B, the quadratic
self-interaction g = -U.grad U + B.grad B and its splitting into a gradient
plus a small remainder G.  Every identity is checked at the discrete level
with the same dealiased products the solver uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from .diagnostics.norms import derivative_linf, l2_norm, spectral_l1_norm
from .initial_data import beltrami_residual
from .spectral import (
    SpectralField,
    apply_radial_multiplier,
    differentiate,
    fractional_power,
    inverse_laplacian,
    multiply_dealiased,
    one_plus_inverse_laplacian,
)

__all__ = [
    "BackgroundState",
    "background_at",
    "forcing_terms",
    "interaction_residual",
    "source_g",
    "self_remainder",
    "decompose_g_2d",
    "decomposition_residual_2d",
    "source_G_3d",
    "source_G",
    "identity_residual_3d",
]

BELTRAMI_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class BackgroundState:
    U0: SpectralField
    mu: float = 1.0
    nu: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.mu > 0 and self.nu > 0):
            raise ValueError("mu and nu must be positive")
        for name in ("alpha", "beta"):
            if not 0 <= getattr(self, name) <= 2:
                raise ValueError(f"{name} must lie in [0, 2]")
        if self.U0.components != self.U0.domain.dim:
            raise ValueError("U0 must be a d-component vector field")

    @property
    def domain(self):
        return self.U0.domain

    def decay_U(self, t: float) -> float:
        return math.exp(-self.mu * t)

    def decay_B(self, t: float) -> float:
        return math.exp(-self.nu * t)

    @cached_property
    def U0_advection(self) -> SpectralField:
        """U0 . grad U0 (dealiased)."""
        return multiply_dealiased(self.U0, self.U0, "advection")

    @cached_property
    def forcing_shapes(self) -> tuple[SpectralField, SpectralField]:
        """(Lambda^alpha - 1) U0 and (Lambda^beta - 1) U0."""
        return (
            apply_radial_multiplier(self.U0, fractional_power(self.alpha)) - self.U0,
            apply_radial_multiplier(self.U0, fractional_power(self.beta)) - self.U0,
        )

    @cached_property
    def U0_l2(self) -> float:
        return l2_norm(self.U0)

    @cached_property
    def U0_l1hat(self) -> float:
        return spectral_l1_norm(self.U0)

    @cached_property
    def U0_bernstein(self) -> float:
        """||grad U0||_inf + ||grad^4 U0||_inf."""
        return derivative_linf(self.U0, 1) + derivative_linf(self.U0, 4)

    @cached_property
    def U0_remainder(self) -> SpectralField:
        return self_remainder(self.U0)


def _check_t(t: float):
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")


def background_at(state: BackgroundState, t: float) -> tuple[SpectralField, SpectralField]:
    _check_t(t)
    return state.decay_U(t) * state.U0, state.decay_B(t) * state.U0


def forcing_terms(state: BackgroundState, t: float) -> tuple[SpectralField, SpectralField]:
    """f = mu (Lambda^alpha - 1) U(t),  h = nu (Lambda^beta - 1) B(t)."""
    _check_t(t)
    fU, fB = state.forcing_shapes
    return (state.mu * state.decay_U(t)) * fU, (state.nu * state.decay_B(t)) * fB


def interaction_fields(U: SpectralField, B: SpectralField) -> SpectralField:
    """-U . grad B + B . grad U."""
    return multiply_dealiased(B, U, "advection") - multiply_dealiased(U, B, "advection")


def interaction_residual(state: BackgroundState, t: float) -> tuple[float, float]:
    """L2 norm of -U.grad B + B.grad U, absolute and relative to ||B.grad U||.

    It vanishes because U and B are parallel.
    """
    U, B = background_at(state, t)
    res = l2_norm(interaction_fields(U, B))
    scale = l2_norm(multiply_dealiased(B, U, "advection"))
    return res, (res / scale if scale else 0.0)


def _advection_scale(state: BackgroundState, t: float) -> float:
    U, B = background_at(state, t)
    return l2_norm(multiply_dealiased(U, U, "advection")) + l2_norm(multiply_dealiased(B, B, "advection"))


def source_g(state: BackgroundState, t: float) -> SpectralField:
    """g = -U.grad U + B.grad B, evaluated directly with dealiased products."""
    U, B = background_at(state, t)
    return multiply_dealiased(B, B, "advection") - multiply_dealiased(U, U, "advection")


def self_remainder(W: SpectralField) -> SpectralField:
    """Non-gradient part R(W) of W.grad W.

    2D: W^perp (1 + Delta^-1)(curl W).  3D: (Lambda W - W) x W.
    """
    d = W.domain
    if d.dim == 2:
        vort = differentiate(W, "curl")
        return multiply_dealiased(
            apply_radial_multiplier(vort, one_plus_inverse_laplacian()),
            differentiate(W, "perp"),
            "pointwise",
        )
    LW = apply_radial_multiplier(W, fractional_power(1.0))
    return multiply_dealiased(LW - W, W, "cross")


def _half_square(W: SpectralField) -> SpectralField:
    return 0.5 * multiply_dealiased(W, W, "dot")


def decompose_g_2d(state: BackgroundState, t: float) -> tuple[SpectralField, SpectralField]:
    """Return (p_tilde, G) with g = grad p_tilde + G."""
    if state.domain.dim != 2:
        raise ValueError("decompose_g_2d needs a 2D background")
    U, B = background_at(state, t)
    psi_U = apply_radial_multiplier(differentiate(U, "curl"), inverse_laplacian())
    psi_B = apply_radial_multiplier(differentiate(B, "curl"), inverse_laplacian())
    p = _half_square(B) + _half_square(psi_B) - _half_square(U) - _half_square(psi_U)
    G = self_remainder(B) - self_remainder(U)
    return p, G


def decomposition_residual_2d(state: BackgroundState, t: float) -> tuple[float, float]:
    """(||g - grad p - G||, same divided by ||U.grad U|| + ||B.grad B||)."""
    p, G = decompose_g_2d(state, t)
    res = l2_norm(source_g(state, t) - differentiate(p, "gradient") - G)
    scale = _advection_scale(state, t)
    return res, (res / scale if scale else 0.0)


def source_G_3d(state: BackgroundState, t: float) -> SpectralField:
    """G = (Lambda B - B) x B - (Lambda U - U) x U."""
    if state.domain.dim != 3:
        raise ValueError("source_G_3d needs a 3D background")
    res = beltrami_residual(state.U0)
    if res > BELTRAMI_TOL * max(state.U0_l2, 1e-300):
        raise ValueError(f"U0 is not Beltrami: residual {res:.3e}")
    U, B = background_at(state, t)
    return self_remainder(B) - self_remainder(U)


def identity_residual_3d(state: BackgroundState, t: float) -> tuple[float, float]:
    """(||g - grad((|B|^2 - |U|^2)/2) - G||, relative to ||U.grad U|| + ||B.grad B||)."""
    U, B = background_at(state, t)
    G = source_G_3d(state, t)
    pot = _half_square(B) - _half_square(U)
    res = l2_norm(source_g(state, t) - differentiate(pot, "gradient") - G)
    scale = _advection_scale(state, t)
    return res, (res / scale if scale else 0.0)


def source_G(state: BackgroundState, t: float) -> SpectralField:
    if state.domain.dim == 2:
        return decompose_g_2d(state, t)[1]
    return source_G_3d(state, t)
