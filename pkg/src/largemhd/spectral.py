"""Fourier-lattice representation of periodic fields on the torus [0, 2*pi*L)^d.

Coefficients are stored in real-FFT (half-spectrum) layout with the component
axis first, so Hermitian symmetry holds by construction.  The forward
transform carries the 1/N^d factor, which makes the stored numbers the
Fourier-series coefficients ``c(xi)`` of ``f(x) = sum_xi c(xi) exp(i xi.x)``
with ``xi = k / L``.  Parseval then reads
``||f||_{L2}^2 = (2 pi L)^d sum_xi |c(xi)|^2``.

A whole-space spectral density sampled on the lattice relates to the
coefficients by ``density(xi) = L^d c(xi)`` (inverse transform without 2*pi
factors), so Riemann sums with weight ``(1/L)^d`` approximate integrals over
frequency space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft

__all__ = [
    "DomainSpec",
    "SpectralField",
    "PhysicalField",
    "RadialSymbol",
    "fractional_power",
    "inverse_laplacian",
    "one_plus_inverse_laplacian",
    "forward_transform",
    "inverse_transform",
    "apply_radial_multiplier",
    "leray_project",
    "differentiate",
    "multiply_dealiased",
    "truncate",
    "hermitian_asymmetry",
]

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class DomainSpec:
    """Torus of side ``2*pi*scale`` sampled with ``points_per_axis`` points per axis."""

    dim: int
    scale: float
    points_per_axis: int
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        n = self.points_per_axis
        if n < 16 or n % 2:
            raise ValueError(f"points_per_axis must be an even integer >= 16, got {n}")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")

    # -- grid geometry -------------------------------------------------------

    @property
    def N(self) -> int:
        return self.points_per_axis

    @property
    def L(self) -> float:
        return self.scale

    @property
    def grid_spacing(self) -> float:
        return 2 * math.pi * self.scale / self.points_per_axis

    @property
    def volume(self) -> float:
        return (2 * math.pi * self.scale) ** self.dim

    @property
    def physical_shape(self) -> tuple[int, ...]:
        return (self.N,) * self.dim

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return (self.N,) * (self.dim - 1) + (self.N // 2 + 1,)

    @property
    def axes(self) -> tuple[int, ...]:
        # spatial axes of a (components, *grid) array
        return tuple(range(1, self.dim + 1))

    def coordinates(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays x_1..x_d of the physical grid."""
        x = np.arange(self.N) * self.grid_spacing
        out = []
        for i in range(self.dim):
            shape = [1] * self.dim
            shape[i] = self.N
            out.append(x.reshape(shape))
        return out

    # -- frequency lattice ---------------------------------------------------

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer lattice indices k_i, broadcastable over the half spectrum."""
        n = self.N
        out = []
        for i in range(self.dim):
            if i == self.dim - 1:
                k = np.arange(n // 2 + 1)
            else:
                k = np.fft.fftfreq(n, 1.0 / n).astype(int)
            shape = [1] * self.dim
            shape[i] = k.size
            out.append(k.reshape(shape))
        return tuple(out)

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        return tuple(k / self.scale for k in self.wavenumbers)

    @cached_property
    def xi_sq(self) -> np.ndarray:
        return sum(x**2 for x in self.xi) * np.ones(self.spectral_shape)

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(self.xi_sq)

    @cached_property
    def nyquist_free(self) -> np.ndarray:
        """True where no index sits on the Nyquist frequency |k_i| = N/2."""
        keep = np.ones(self.spectral_shape, dtype=bool)
        for k in self.wavenumbers:
            keep &= np.abs(k) < self.N // 2
        return keep

    @cached_property
    def dealias_cutoff(self) -> int:
        """Largest retained |k_i|; at fractions up to 2/3 also 3 k < N, so products never alias."""
        cutoff = math.floor(self.dealias_fraction * self.N / 2 + 1e-12)
        if self.dealias_fraction <= 2.0 / 3.0 + 1e-12:
            cutoff = min(cutoff, (self.N - 1) // 3)
        return cutoff

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cutoff = self.dealias_cutoff
        keep = self.nyquist_free.copy()
        for k in self.wavenumbers:
            keep &= np.abs(k) <= cutoff
        return keep

    @cached_property
    def dealias_radius(self) -> float:
        """Largest |xi| such that the whole ball fits inside the retained band."""
        return self.dealias_cutoff / self.scale

    @cached_property
    def half_weights(self) -> np.ndarray:
        """Multiplicity of each stored mode in the full spectrum (1 or 2)."""
        kl = self.wavenumbers[-1]
        w = np.where((kl == 0) | (kl == self.N // 2), 1.0, 2.0)
        return w * np.ones(self.spectral_shape)

    def count_modes(self, r_min: float, r_max: float) -> int:
        """Number of full-spectrum lattice frequencies with r_min <= |xi| <= r_max."""
        sel = (self.xi_abs >= r_min) & (self.xi_abs <= r_max) & self.nyquist_free
        return int(self.half_weights[sel].sum())


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of an m-component real field, shape ``(m, *domain.spectral_shape)``."""

    domain: DomainSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim == self.domain.dim:
            c = c[None]
        if c.shape[1:] != self.domain.spectral_shape:
            raise ValueError(
                f"coefficient shape {c.shape[1:]} does not match domain {self.domain.spectral_shape}"
            )
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, domain: DomainSpec, components: int) -> "SpectralField":
        return cls(domain, np.zeros((components,) + domain.spectral_shape, dtype=complex))

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    def component(self, i: int) -> "SpectralField":
        return SpectralField(self.domain, self.coeffs[i : i + 1])

    @classmethod
    def stack(cls, fields: list["SpectralField"]) -> "SpectralField":
        return cls(fields[0].domain, np.concatenate([f.coeffs for f in fields]))

    def _check(self, other: "SpectralField"):
        if other.domain != self.domain or other.components != self.components:
            raise ValueError("fields live on different domains or have different component counts")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.domain, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.domain, self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.domain, -self.coeffs)

    def __mul__(self, a: float) -> "SpectralField":
        return SpectralField(self.domain, a * self.coeffs)

    __rmul__ = __mul__

    @property
    def mean(self) -> np.ndarray:
        return self.coeffs[(slice(None),) + (0,) * self.domain.dim]


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Grid samples of an m-component real field, shape ``(m, N, ..., N)``."""

    domain: DomainSpec
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == self.domain.dim:
            s = s[None]
        if s.shape[1:] != self.domain.physical_shape:
            raise ValueError(
                f"sample shape {s.shape[1:]} does not match domain {self.domain.physical_shape}"
            )
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_function(cls, domain: DomainSpec, func: Callable) -> "PhysicalField":
        """Sample ``func(*coords)`` which returns one array or a sequence of component arrays."""
        values = func(*domain.coordinates())
        if isinstance(values, np.ndarray) and values.ndim <= domain.dim:
            values = [values]
        return cls(domain, np.stack([np.broadcast_to(v, domain.physical_shape) for v in values]))

    @property
    def components(self) -> int:
        return self.samples.shape[0]


# -- transforms ---------------------------------------------------------------


def forward_transform(f: PhysicalField) -> SpectralField:
    d = f.domain
    c = sfft.rfftn(f.samples, axes=d.axes, workers=-1) / d.N**d.dim
    return SpectralField(d, c)


def hermitian_asymmetry(F: SpectralField) -> float:
    """Max |c(-xi) - conj(c(xi))| over the self-conjugate planes of the half spectrum."""
    d = F.domain
    worst = 0.0
    plane_axes = tuple(range(1, d.dim))
    for kl in (0, d.N // 2):
        plane = F.coeffs[..., kl]
        mirrored = np.roll(np.flip(plane, axis=plane_axes), 1, axis=plane_axes)
        worst = max(worst, float(np.max(np.abs(plane - np.conj(mirrored)), initial=0.0)))
    return worst


def inverse_transform(F: SpectralField) -> PhysicalField:
    d = F.domain
    asym = hermitian_asymmetry(F)
    scale = float(np.max(np.abs(F.coeffs), initial=0.0))
    if asym > HERMITIAN_TOL * max(scale, 1.0):
        raise ValueError(f"field is not Hermitian-symmetric: max asymmetry {asym:.3e}")
    return PhysicalField(d, _to_physical(F.coeffs, d))


def _to_physical(coeffs: np.ndarray, d: DomainSpec) -> np.ndarray:
    return sfft.irfftn(coeffs * d.N**d.dim, s=d.physical_shape, axes=d.axes, workers=-1)


def _to_spectral(samples: np.ndarray, d: DomainSpec) -> np.ndarray:
    return sfft.rfftn(samples, axes=d.axes, workers=-1) / d.N**d.dim


def truncate(F: SpectralField) -> SpectralField:
    """Zero every mode outside the dealiasing band (Nyquist included)."""
    return SpectralField(F.domain, F.coeffs * F.domain.dealias_mask)


# -- radial multipliers -------------------------------------------------------


@dataclass(frozen=True)
class RadialSymbol:
    """Symbol m(|xi|) of a radial Fourier multiplier.

    ``singular`` symbols are undefined at xi = 0; they map the mean mode to
    zero and refuse fields whose mean is nonzero.
    """

    func: Callable[[np.ndarray], np.ndarray]
    singular: bool = False
    name: str = "custom"

    def values(self, domain: DomainSpec) -> np.ndarray:
        r = domain.xi_abs
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.asarray(self.func(r), dtype=float) * np.ones_like(r)
        if self.singular:
            m = np.where(r == 0, 0.0, m)
        return m


def fractional_power(gamma: float) -> RadialSymbol:
    """Lambda^gamma, symbol |xi|^gamma; gamma = 0 is the identity on every mode."""
    if not -2 <= gamma <= 2:
        raise ValueError(f"gamma must lie in [-2, 2], got {gamma}")
    if gamma == 0:
        return RadialSymbol(lambda r: np.ones_like(r), name="Lambda^0")
    if gamma > 0:
        return RadialSymbol(lambda r: r**gamma, name=f"Lambda^{gamma:g}")
    return RadialSymbol(lambda r: r**gamma, singular=True, name=f"Lambda^{gamma:g}")


def inverse_laplacian() -> RadialSymbol:
    return RadialSymbol(lambda r: -1.0 / r**2, singular=True, name="Delta^-1")


def one_plus_inverse_laplacian() -> RadialSymbol:
    return RadialSymbol(lambda r: 1.0 - 1.0 / r**2, singular=True, name="1+Delta^-1")


def _mean_is_zero(F: SpectralField) -> bool:
    scale = float(np.max(np.abs(F.coeffs), initial=0.0))
    return float(np.max(np.abs(F.mean))) <= 1e-13 * max(scale, 1e-300)


def apply_radial_multiplier(F: SpectralField, symbol: RadialSymbol) -> SpectralField:
    if symbol.singular and not _mean_is_zero(F):
        raise ValueError(f"{symbol.name} applied to a field with nonzero mean mode")
    d = F.domain
    return SpectralField(d, F.coeffs * (symbol.values(d) * d.nyquist_free))


# -- projection and derivatives ------------------------------------------------


def leray_project(F: SpectralField) -> SpectralField:
    d = F.domain
    if F.components != d.dim:
        raise ValueError(f"Leray projection needs a {d.dim}-component field, got {F.components}")
    return SpectralField(d, _leray(F.coeffs, d))


def _leray(c: np.ndarray, d: DomainSpec) -> np.ndarray:
    xi = d.xi
    k2 = d.xi_sq
    inv = np.divide(1.0, k2, out=np.zeros_like(k2), where=k2 > 0)
    div = sum(xi[i] * c[i] for i in range(d.dim)) * inv
    out = np.stack([c[i] - xi[i] * div for i in range(d.dim)])
    out[(slice(None),) + (0,) * d.dim] = 0.0
    return out * d.nyquist_free


def _ik(d: DomainSpec) -> list[np.ndarray]:
    return [1j * x * d.nyquist_free for x in d.xi]


def differentiate(F: SpectralField, kind: str) -> SpectralField:
    """Spectral gradient, divergence, curl or 2D perp of ``F``.

    The gradient of an m-component field has m*d components ordered
    (component, axis).  The 2D curl is the scalar d1 F2 - d2 F1.
    """
    d = F.domain
    c = F.coeffs
    ik = _ik(d)
    if kind == "gradient":
        out = np.stack([ik[j] * c[i] for i in range(F.components) for j in range(d.dim)])
    elif kind == "divergence":
        if F.components != d.dim:
            raise ValueError("divergence needs a vector field")
        out = sum(ik[i] * c[i] for i in range(d.dim))[None]
    elif kind == "curl":
        if F.components != d.dim:
            raise ValueError(f"curl needs a {d.dim}-component field, got {F.components}")
        if d.dim == 2:
            out = (ik[0] * c[1] - ik[1] * c[0])[None]
        else:
            out = np.stack([
                ik[1] * c[2] - ik[2] * c[1],
                ik[2] * c[0] - ik[0] * c[2],
                ik[0] * c[1] - ik[1] * c[0],
            ])
    elif kind == "perp":
        if d.dim != 2 or F.components != 2:
            raise ValueError("perp is only defined for 2D vector fields")
        out = np.stack([-c[1], c[0]])
    else:
        raise ValueError(f"unknown derivative kind {kind!r}")
    return SpectralField(d, out)


# -- dealiased products --------------------------------------------------------


def multiply_dealiased(F: SpectralField, G: SpectralField, contraction: str = "pointwise") -> SpectralField:
    """Quadratic product with the 2/3 rule applied before and after.

    ``contraction`` is one of:

    * ``"pointwise"``: componentwise product, a scalar broadcasts against a vector
    * ``"dot"``: sum_i F_i G_i
    * ``"advection"``: (F . grad) G, with F a d-vector
    * ``"cross"``: F x G (3D only)
    """
    d = F.domain
    if G.domain != d:
        raise ValueError("fields live on different domains")
    mask = d.dealias_mask
    f = _to_physical(F.coeffs * mask, d)
    if contraction == "pointwise":
        if F.components != G.components and 1 not in (F.components, G.components):
            raise ValueError("pointwise product needs matching components or a scalar factor")
        out = f * _to_physical(G.coeffs * mask, d)
    elif contraction == "dot":
        if F.components != G.components:
            raise ValueError("dot product needs matching component counts")
        out = np.sum(f * _to_physical(G.coeffs * mask, d), axis=0, keepdims=True)
    elif contraction == "advection":
        if F.components != d.dim:
            raise ValueError("advecting field must be a d-vector")
        ik = _ik(d)
        g = G.coeffs * mask
        out = np.zeros((G.components,) + d.physical_shape)
        for j in range(d.dim):
            out += f[j] * _to_physical(ik[j] * g, d)
    elif contraction == "cross":
        if d.dim != 3 or F.components != 3 or G.components != 3:
            raise ValueError("cross product needs two 3D vector fields")
        g = _to_physical(G.coeffs * mask, d)
        out = np.cross(f, g, axis=0)
    else:
        raise ValueError(f"unknown contraction {contraction!r}")
    return SpectralField(d, _to_spectral(out, d) * mask)
