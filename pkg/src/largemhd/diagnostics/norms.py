"""Lattice norms of spectral fields."""

from __future__ import annotations

import itertools
import math
import re

import numpy as np

from ..spectral import SpectralField, _to_physical

__all__ = [
    "norm",
    "sobolev_norm",
    "l2_norm",
    "linf_norm",
    "spectral_l1_norm",
    "inner",
    "derivative_linf",
]


def sobolev_norm(F: SpectralField, s: float) -> float:
    """Nonhomogeneous H^s norm with weight (1 + |xi|^2)^s."""
    if s < 0:
        raise ValueError(f"Sobolev index must be nonnegative, got {s}")
    d = F.domain
    w = d.half_weights * (1.0 + d.xi_sq) ** s
    total = float(np.sum(w * np.abs(F.coeffs) ** 2))
    return math.sqrt(d.volume * total)


def l2_norm(F: SpectralField) -> float:
    return sobolev_norm(F, 0.0)


def inner(F: SpectralField, G: SpectralField) -> float:
    """Real L^2 inner product summed over components."""
    d = F.domain
    return d.volume * float(np.sum(d.half_weights * np.real(np.conj(F.coeffs) * G.coeffs)))


def linf_norm(F: SpectralField) -> float:
    """Max over the grid of the pointwise Euclidean magnitude."""
    f = _to_physical(F.coeffs, F.domain)
    return float(np.sqrt(np.max(np.sum(f**2, axis=0))))


def spectral_l1_norm(F: SpectralField) -> float:
    """Riemann sum of |density| with weight (1/L)^d; equals sum_xi |c(xi)|.

    Bounds the sup norm: ||F||_inf <= spectral_l1_norm(F).
    """
    d = F.domain
    mag = np.sqrt(np.sum(np.abs(F.coeffs) ** 2, axis=0))
    return float(np.sum(d.half_weights * mag))


def derivative_linf(F: SpectralField, order: int) -> float:
    """Sup norm of the full order-k derivative tensor (Frobenius magnitude).

    Distinct multi-indices are evaluated once and weighted by their
    multinomial multiplicity.
    """
    d = F.domain
    if order == 0:
        return linf_norm(F)
    ik = [1j * x * d.nyquist_free for x in d.xi]
    acc = np.zeros(d.physical_shape)
    for combo in itertools.combinations_with_replacement(range(d.dim), order):
        counts = [combo.count(j) for j in range(d.dim)]
        mult = math.factorial(order)
        for c in counts:
            mult //= math.factorial(c)
        sym = np.ones(d.spectral_shape, dtype=complex)
        for j in combo:
            sym = sym * ik[j]
        values = _to_physical(F.coeffs * sym, d)
        acc += mult * np.sum(values**2, axis=0)
    return float(np.sqrt(acc.max()))


_H = re.compile(r"^H\^?(\d+(?:\.\d+)?)$")


def norm(F: SpectralField, kind: str | float) -> float:
    """Dispatch on a norm tag: ``"L2"``, ``"Linf"``, ``"L1hat"`` or ``"H<s>"`` (or a float s)."""
    if isinstance(kind, (int, float)):
        return sobolev_norm(F, float(kind))
    if kind == "L2":
        return l2_norm(F)
    if kind == "Linf":
        return linf_norm(F)
    if kind in ("L1hat", "spectral-L1"):
        return spectral_l1_norm(F)
    m = _H.match(kind)
    if m:
        return sobolev_norm(F, float(m.group(1)))
    raise ValueError(f"unknown norm kind {kind!r}")
