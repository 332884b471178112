"""Empirical constants for the commutator and product (Moser-type) estimates.

For random band-limited scalar pairs (f, g) the four ratios

    commutator_a: sum_{0<|a|<=3} ||[D^a, g] f|| / (||f||_H2 ||grad g||_inf + ||f||_inf ||g||_H3)
    commutator_b: same / ((||grad g||_inf + ||grad^3 g||_inf) ||f||_H2)
    product_a:    sum_{|a|<=3} ||D^a (f g)|| / (||f||_H3 ||g||_H3)
    product_b:    same / ((||f||_inf + ||grad^3 f||_inf) ||g||_H3)

are measured and their maxima over trials reported.  A finite sample cannot
certify the universal constants; agreement across resolutions is the check.

Commutators are expanded by Leibniz' rule, sum_{0<b<=a} C(a,b) D^b g D^(a-b) f,
so a constant g gives exactly zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from ..spectral import DomainSpec, PhysicalField, SpectralField, _to_physical, forward_transform
from .norms import sobolev_norm

__all__ = ["multi_indices", "random_band_limited", "moser_ratios", "moser_constants", "moser_check", "MoserReport"]

KEYS = ("commutator_a", "commutator_b", "product_a", "product_b")


def multi_indices(dim: int, max_order: int, min_order: int = 0) -> list[tuple[int, ...]]:
    return [
        a for a in itertools.product(range(max_order + 1), repeat=dim)
        if min_order <= sum(a) <= max_order
    ]


def _binom(a, b) -> int:
    return math.prod(math.comb(x, y) for x, y in zip(a, b))


def _sub_indices(a):
    return itertools.product(*(range(x + 1) for x in a))


class _Derivs:
    """Physical samples of D^a F for every multi-index up to ``order``."""

    def __init__(self, F: SpectralField, order: int):
        d = F.domain
        self.domain = d
        ik = [1j * x * d.nyquist_free for x in d.xi]
        self.vals = {}
        for a in multi_indices(d.dim, order):
            sym = np.ones(d.spectral_shape, dtype=complex)
            for j, p in enumerate(a):
                if p:
                    sym = sym * ik[j] ** p
            self.vals[a] = _to_physical(F.coeffs[:1] * sym, d)[0]

    def __getitem__(self, a):
        return self.vals[a]

    def sup_of_order(self, k: int) -> float:
        """Sup of the Frobenius magnitude of the order-k derivative tensor."""
        acc = 0.0
        for a in multi_indices(self.domain.dim, k, k):
            mult = math.factorial(k) // math.prod(math.factorial(x) for x in a)
            acc = acc + mult * self.vals[a] ** 2
        return float(np.sqrt(np.max(acc)))


def _l2(samples: np.ndarray, d: DomainSpec) -> float:
    # grid quadrature is exact for the band-limited products used here
    return math.sqrt(d.volume * float(np.mean(samples**2)))


def random_band_limited(domain: DomainSpec, rng: np.random.Generator, kmax: int = 4) -> SpectralField:
    """Random real scalar with integer wavenumbers |k|_inf <= kmax, independent of N.

    Coefficients decay like (1 + |k|^2)^-1 so the field is smooth.
    """
    d = domain
    if 2 * kmax >= d.N // 3:
        raise ValueError(f"N = {d.N} too small for band kmax = {kmax}")
    coords = d.coordinates()
    field = np.zeros(d.physical_shape)
    for k in itertools.product(range(-kmax, kmax + 1), repeat=d.dim):
        if k <= (0,) * d.dim:
            continue  # one representative per +-k pair, mean added separately
        amp = 1.0 / (1.0 + sum(x * x for x in k))
        a, b = rng.standard_normal(2) * amp
        phase = sum(kj * xj for kj, xj in zip(k, coords)) / d.scale
        field = field + a * np.cos(phase) + b * np.sin(phase)
    field = field + rng.standard_normal()
    return forward_transform(PhysicalField(d, field))


def moser_ratios(f: SpectralField, g: SpectralField, order: int = 3) -> dict:
    """Left sides, right sides and ratios of the four estimates for one pair."""
    d = f.domain
    Df, Dg = _Derivs(f, order), _Derivs(g, order)
    comm = 0.0
    for a in multi_indices(d.dim, order, 1):
        term = np.zeros(d.physical_shape)
        for b in _sub_indices(a):
            if sum(b) == 0:
                continue
            rest = tuple(x - y for x, y in zip(a, b))
            term = term + _binom(a, b) * Dg[b] * Df[rest]
        comm += _l2(term, d)
    prod = 0.0
    for a in multi_indices(d.dim, order):
        term = np.zeros(d.physical_shape)
        for b in _sub_indices(a):
            rest = tuple(x - y for x, y in zip(a, b))
            term = term + _binom(a, b) * Df[b] * Dg[rest]
        prod += _l2(term, d)
    f_h2, f_h3, g_h3 = sobolev_norm(f, 2), sobolev_norm(f, 3), sobolev_norm(g, 3)
    f_inf = float(np.max(np.abs(Df[(0,) * d.dim])))
    grad_g, grad3_g = Dg.sup_of_order(1), Dg.sup_of_order(order)
    grad3_f = Df.sup_of_order(order)
    rhs = {
        "commutator_a": f_h2 * grad_g + f_inf * g_h3,
        "commutator_b": (grad_g + grad3_g) * f_h2,
        "product_a": f_h3 * g_h3,
        "product_b": (f_inf + grad3_f) * g_h3,
    }
    lhs = {"commutator_a": comm, "commutator_b": comm, "product_a": prod, "product_b": prod}
    ratios = {k: (lhs[k] / rhs[k] if rhs[k] > 0 else 0.0) for k in KEYS}
    return {"lhs": lhs, "rhs": rhs, "ratios": ratios}


def moser_constants(trials: int, seed: int, domain: DomainSpec, kmax: int = 4) -> dict:
    """Maximum of each ratio over ``trials`` seeded random pairs."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst = dict.fromkeys(KEYS, 0.0)
    for _ in range(trials):
        f = random_band_limited(domain, rng, kmax)
        g = random_band_limited(domain, rng, kmax)
        r = moser_ratios(f, g)["ratios"]
        for k in KEYS:
            worst[k] = max(worst[k], r[k])
    return worst


@dataclass
class MoserReport:
    constants: dict
    spread: dict
    passed: bool


def moser_check(trials: int, seed: int, domain: DomainSpec, resolutions=(64, 128), kmax: int = 4,
                max_spread: float = 2.0) -> MoserReport:
    """Empirical constants at each resolution; pass if finite and within ``max_spread``x."""
    constants = {
        n: moser_constants(trials, seed, replace(domain, points_per_axis=n), kmax) for n in resolutions
    }
    spread = {}
    ok = True
    for k in KEYS:
        vals = [constants[n][k] for n in resolutions]
        finite = all(math.isfinite(v) and v > 0 for v in vals)
        spread[k] = max(vals) / min(vals) if finite else math.inf
        ok = ok and finite and spread[k] <= max_spread
    return MoserReport(constants, spread, ok)
