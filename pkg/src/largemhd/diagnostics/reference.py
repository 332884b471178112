"""Brute-force convolution used as an oracle for the dealiased products.

The retained modes |k_i| <= K of both factors are convolved directly,
sum_{p+q=k} a(p) b(q), on an unwrapped lattice of half-width 2K and then
truncated back to the band.  Cost is O((2K+1)^(2d)); meant for N <= 16.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..spectral import SpectralField
from .io import _full_spectrum

__all__ = ["direct_product"]


def _band(F: SpectralField) -> np.ndarray:
    """Coefficients on |k_i| <= K as an array indexed by k + K."""
    d = F.domain
    K = d.dealias_cutoff
    full = _full_spectrum(SpectralField(d, F.coeffs * d.dealias_mask))
    idx = np.arange(-K, K + 1) % d.N
    return full[(slice(None),) + np.ix_(*([idx] * d.dim))]


def direct_product(F: SpectralField, G: SpectralField, contraction: str = "pointwise") -> SpectralField:
    """Same contract as ``multiply_dealiased`` but evaluated by direct convolution."""
    d = F.domain
    K = d.dealias_cutoff
    a, b = _band(F), _band(G)
    width = 2 * K + 1
    q = np.arange(-K, K + 1) / d.scale
    iq = [1j * q.reshape([width if j == i else 1 for j in range(d.dim)]) for i in range(d.dim)]
    if contraction == "pointwise":
        m = max(F.components, G.components)
    elif contraction in ("dot",):
        m = 1
    elif contraction == "advection":
        m = G.components
    elif contraction == "cross":
        m = 3
    else:
        raise ValueError(f"unknown contraction {contraction!r}")
    acc = np.zeros((m,) + (2 * width - 1,) * d.dim, dtype=complex)
    for p in itertools.product(range(width), repeat=d.dim):
        ap = a[(slice(None),) + p]
        if not ap.any():
            continue
        ap = ap.reshape((-1,) + (1,) * d.dim)
        if contraction == "pointwise":
            block = ap * b
        elif contraction == "dot":
            block = np.sum(ap * b, axis=0, keepdims=True)
        elif contraction == "advection":
            block = sum(ap[j] * iq[j] * b for j in range(d.dim))
        else:
            block = np.cross(np.broadcast_to(ap, b.shape), b, axis=0)
        acc[(slice(None),) + tuple(slice(x, x + width) for x in p)] += block
    # acc index j corresponds to k = j - 2K; keep |k_i| <= K
    kept = acc[(slice(None),) + (slice(K, K + width),) * d.dim]
    full = np.zeros((m,) + d.physical_shape, dtype=complex)
    idx = np.arange(-K, K + 1) % d.N
    full[(slice(None),) + np.ix_(*([idx] * d.dim))] = kept
    return SpectralField(d, full[..., : d.N // 2 + 1] * d.dealias_mask)
