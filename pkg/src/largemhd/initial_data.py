"""Large initial data concentrated on the frequency annulus 1 - eps <= |xi| <= 1 + eps.

Both constructions assemble a radial whole-space spectral density on the
lattice (coefficient = density * L^-d, see :mod:`largemhd.spectral`).  With
that convention the spectrum-L1 norm dominates the sup norm with constant 1,
so the large L-infinity size of the data is visible directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics.norms import l2_norm, sobolev_norm, spectral_l1_norm
from .spectral import (
    DomainSpec,
    PhysicalField,
    SpectralField,
    forward_transform,
    apply_radial_multiplier,
    differentiate,
    fractional_power,
    leray_project,
)

__all__ = [
    "DataSpec",
    "AnnulusProfile",
    "radial_bump",
    "amplitude",
    "default_scale",
    "annulus_mode_count",
    "build_data",
    "build_data_2d",
    "build_data_3d",
    "random_solenoidal",
    "largeness_lhs",
    "verify_support",
    "SupportViolation",
]


@dataclass(frozen=True)
class DataSpec:
    """Controls for the annulus-supported data.

    ``amplitude=None`` selects the law eps^-1 (log log 1/eps)^(1/2);
    ``amplitude=0`` switches the background off.
    ``v0_amplitude``/``c0_amplitude`` are L2 sizes of optional random
    solenoidal perturbations band-limited to |xi| <= ``perturbation_kmax``.
    """

    epsilon: float
    amplitude: float | None = None
    bump_sharpness: float = 1.0
    v0_amplitude: float = 0.0
    c0_amplitude: float = 0.0
    perturbation_kmax: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if self.amplitude is None and not self.epsilon < 1 / math.e:
            raise ValueError("amplitude law needs log log(1/eps) > 0, i.e. eps < 1/e")
        if self.amplitude is not None and not self.amplitude >= 0:
            raise ValueError(f"explicit amplitude must be nonnegative, got {self.amplitude}")
        if not self.bump_sharpness > 0:
            raise ValueError("bump_sharpness must be positive")
        if self.v0_amplitude < 0 or self.c0_amplitude < 0:
            raise ValueError("perturbation amplitudes must be nonnegative")

    @property
    def amplitude_value(self) -> float:
        if self.amplitude is not None:
            return self.amplitude
        return amplitude(self.epsilon)


def amplitude(epsilon: float) -> float:
    return math.sqrt(math.log(math.log(1.0 / epsilon))) / epsilon


def default_scale(epsilon: float) -> int:
    """Torus scale L = 2/eps rounded up."""
    return math.ceil(2.0 / epsilon - 1e-9)


@dataclass(frozen=True)
class AnnulusProfile:
    """Smooth radial bump: 1 on [1 - eps/2, 1 + eps/2], 0 outside [1 - eps, 1 + eps]."""

    epsilon: float
    sharpness: float = 1.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        eps = self.epsilon
        half = eps / 2
        s = np.clip((np.abs(r - 1.0) - half) / half, 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            val = np.exp(self.sharpness * (1.0 - 1.0 / (1.0 - s**2)))
        val = np.where(s >= 1.0, 0.0, val)
        return val if val.ndim else float(val)


def radial_bump(epsilon: float, sharpness: float = 1.0) -> AnnulusProfile:
    if not 0 < epsilon < 0.5:
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    return AnnulusProfile(epsilon, sharpness)


def annulus_mode_count(domain: DomainSpec, epsilon: float) -> int:
    return domain.count_modes(1 - epsilon, 1 + epsilon)


def _density(spec: DataSpec, domain: DomainSpec) -> np.ndarray:
    eps = spec.epsilon
    if (1 + eps) >= domain.dealias_radius:
        raise ValueError(
            f"annulus |xi| <= {1 + eps} exceeds the resolved band {domain.dealias_radius:.3f}"
        )
    if annulus_mode_count(domain, eps) == 0:
        raise ValueError(f"no lattice frequency falls inside the annulus for L = {domain.scale}")
    profile = radial_bump(eps, spec.bump_sharpness)
    return profile(domain.xi_abs) * domain.nyquist_free / domain.scale**domain.dim


def random_solenoidal(domain: DomainSpec, size: float, kmax: float, rng: np.random.Generator) -> SpectralField:
    """Random mean-free solenoidal field on |xi| <= kmax with L2 norm ``size``."""
    if size == 0:
        return SpectralField.zeros(domain, domain.dim)
    shape = (domain.dim, *domain.physical_shape)
    F = forward_transform(PhysicalField(domain, rng.standard_normal(shape)))
    band = (domain.xi_abs <= kmax) & domain.dealias_mask
    F = leray_project(SpectralField(domain, F.coeffs * band))
    n = l2_norm(F)
    if n == 0:
        raise ValueError(f"no lattice modes with |xi| <= {kmax}")
    return F * (size / n)


def _perturbations(spec: DataSpec, domain: DomainSpec) -> tuple[SpectralField, SpectralField]:
    rng = np.random.default_rng(spec.seed)
    v0 = random_solenoidal(domain, spec.v0_amplitude, spec.perturbation_kmax, rng)
    c0 = random_solenoidal(domain, spec.c0_amplitude, spec.perturbation_kmax, rng)
    return v0, c0


def build_data_2d(spec: DataSpec, domain: DomainSpec):
    """Return ``(u0, b0, U0)`` with U0 = (d2 a0, -d1 a0), a0 = amplitude * bump."""
    if domain.dim != 2:
        raise ValueError("build_data_2d needs a 2D domain")
    a0 = SpectralField(domain, spec.amplitude_value * _density(spec, domain))
    grad = differentiate(a0, "gradient").coeffs
    U0 = SpectralField(domain, np.stack([grad[1], -grad[0]]))
    v0, c0 = _perturbations(spec, domain)
    return U0 + v0, U0 + c0, U0


def build_data_3d(spec: DataSpec, domain: DomainSpec):
    """Return ``(u0, b0, U0)`` with U0 = V0 + Lambda^-1 curl V0, V0 = amplitude * curl(a0, 0, 0)."""
    if domain.dim != 3:
        raise ValueError("build_data_3d needs a 3D domain")
    a0 = _density(spec, domain)
    ik = [1j * x for x in domain.xi]
    amp = spec.amplitude_value
    V0 = SpectralField(domain, amp * np.stack([np.zeros_like(a0 * ik[2]), ik[2] * a0, -ik[1] * a0]))
    U0 = V0 + apply_radial_multiplier(differentiate(V0, "curl"), fractional_power(-1.0))
    residual = beltrami_residual(U0)
    if residual > 1e-12 * max(l2_norm(U0), 1e-300):
        raise ValueError(f"Beltrami residual {residual:.3e} above tolerance")
    v0, c0 = _perturbations(spec, domain)
    return U0 + v0, U0 + c0, U0


def build_data(spec: DataSpec, domain: DomainSpec):
    if domain.dim == 2:
        return build_data_2d(spec, domain)
    return build_data_3d(spec, domain)


def closed_form_3d(spec: DataSpec, domain: DomainSpec) -> np.ndarray:
    """Componentwise closed-form spectrum of the 3D data."""
    xi1, xi2, xi3 = domain.xi
    r = domain.xi_abs
    a0 = _density(spec, domain)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(r > 0, a0 / r, 0.0)
    amp = spec.amplitude_value
    return amp * np.stack([
        (xi2**2 + xi3**2) * w,
        (-xi1 * xi2 + 1j * xi3 * r) * w,
        (-xi1 * xi3 - 1j * xi2 * r) * w,
    ])


def beltrami_residual(U: SpectralField) -> float:
    """L2 norm of curl U - Lambda U."""
    return l2_norm(differentiate(U, "curl") - apply_radial_multiplier(U, fractional_power(1.0)))


def largeness_lhs(v0: SpectralField, c0: SpectralField, U0: SpectralField, epsilon: float, C: float) -> float:
    """Left side of the global-existence smallness condition for constant ``C``.

    (|v0|_H3^2 + |c0|_H3^2 + eps |U0|_L2 (1 + |U0^|_L1))
        * exp(C (|U0^|_L1 + eps |U0|_L2 (1 + |U0^|_L1)))
    """
    if not C > 0:
        raise ValueError("C must be positive")
    l1 = spectral_l1_norm(U0)
    cross = epsilon * l2_norm(U0) * (1.0 + l1)
    prefactor = sobolev_norm(v0, 3) ** 2 + sobolev_norm(c0, 3) ** 2 + cross
    return prefactor * math.exp(C * (l1 + cross))


@dataclass(frozen=True)
class SupportViolation:
    radius: float
    magnitude: float
    index: tuple = field(default=())


def verify_support(U0: SpectralField, epsilon: float, rtol: float = 1e-13) -> list[SupportViolation]:
    """List coefficients outside the annulus whose magnitude exceeds rtol * max."""
    d = U0.domain
    mag = np.sqrt(np.sum(np.abs(U0.coeffs) ** 2, axis=0))
    peak = float(mag.max(initial=0.0))
    if peak == 0:
        return []
    r = d.xi_abs
    outside = ((r < 1 - epsilon) | (r > 1 + epsilon)) & (mag > rtol * peak)
    return [
        SupportViolation(float(r[idx]), float(mag[idx]), tuple(int(i) for i in idx))
        for idx in zip(*np.nonzero(outside))
    ]
