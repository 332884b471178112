import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field
from largemhd.diagnostics.norms import l2_norm
from largemhd.diagnostics.reference import direct_product
from largemhd.spectral import (
    DomainSpec,
    PhysicalField,
    SpectralField,
    apply_radial_multiplier,
    differentiate,
    forward_transform,
    fractional_power,
    inverse_laplacian,
    inverse_transform,
    leray_project,
    multiply_dealiased,
)


def mode_index(domain, k):
    """Half-spectrum index of the integer wavenumber k (last component >= 0)."""
    return tuple(int(x) % domain.N for x in k[:-1]) + (int(k[-1]),)


class TestDomain:
    def test_lattice_spacing_is_one_over_L(self):
        d = DomainSpec(2, 2.5, 16)
        xi = d.xi[0].ravel()
        assert np.isclose(np.min(np.diff(np.sort(xi))), 1 / 2.5)
        assert math.isclose(d.grid_spacing, 2 * math.pi * 2.5 / 16)

    @pytest.mark.parametrize("kwargs", [
        {"dim": 4, "scale": 1.0, "points_per_axis": 16},
        {"dim": 2, "scale": -1.0, "points_per_axis": 16},
        {"dim": 2, "scale": 1.0, "points_per_axis": 15},
        {"dim": 2, "scale": 1.0, "points_per_axis": 8},
        {"dim": 2, "scale": 1.0, "points_per_axis": 16, "dealias_fraction": 0.0},
    ])
    def test_rejects_bad_geometry(self, kwargs):
        with pytest.raises(ValueError):
            DomainSpec(**kwargs)

    def test_dealias_cutoff_avoids_aliasing_when_N_divisible_by_three(self):
        assert DomainSpec(2, 1.0, 48).dealias_cutoff == 15
        assert DomainSpec(2, 1.0, 256).dealias_cutoff == 85

    def test_mode_count_counts_hermitian_pairs(self):
        d = DomainSpec(2, 1.0, 16)
        # |k| = 1 on the integer lattice: (+-1, 0), (0, +-1)
        assert d.count_modes(0.99, 1.01) == 4


class TestTransforms:
    def test_cosine_has_two_real_coefficients(self):
        d = DomainSpec(2, 3.0, 32)
        F = forward_transform(PhysicalField.from_function(d, lambda x, y: np.cos(x / 3.0)))
        full = np.abs(F.coeffs[0]) > 1e-14
        # the half spectrum holds k = (1, 0) and (-1, 0) explicitly
        assert full.sum() == 2
        assert np.isclose(F.coeffs[0][mode_index(d, (1, 0))], 0.5)
        assert np.isclose(F.coeffs[0][mode_index(d, (-1, 0))], 0.5)

    def test_constant_only_mean(self, dom2):
        F = forward_transform(PhysicalField(dom2, np.ones(dom2.physical_shape)))
        assert F.mean[0] == pytest.approx(1.0)
        assert np.count_nonzero(np.abs(F.coeffs) > 1e-15) == 1

    def test_unit_pair_inverts_to_cosine(self, dom2):
        c = np.zeros((1,) + dom2.spectral_shape, dtype=complex)
        c[0][mode_index(dom2, (1, 0))] = 0.5
        c[0][mode_index(dom2, (-1, 0))] = 0.5
        x, _ = dom2.coordinates()
        assert np.allclose(inverse_transform(SpectralField(dom2, c)).samples[0], np.cos(x), atol=1e-14)

    def test_zero_field(self, dom3):
        assert not inverse_transform(SpectralField.zeros(dom3, 3)).samples.any()

    @pytest.mark.parametrize("seed", range(100))
    def test_round_trip(self, seed):
        d = DomainSpec(2 + seed % 2, 1.0 + seed / 50, 16 + 2 * (seed % 5))
        rng = np.random.default_rng(seed)
        f = rng.standard_normal((2,) + d.physical_shape)
        back = inverse_transform(forward_transform(PhysicalField(d, f))).samples
        assert np.max(np.abs(back - f)) / np.max(np.abs(f)) <= 1e-12

    def test_shape_mismatch(self, dom2):
        with pytest.raises(ValueError):
            PhysicalField(dom2, np.zeros((2, 16, 16)))
        with pytest.raises(ValueError):
            SpectralField(dom2, np.zeros((2, 32, 32)))

    def test_non_hermitian_input_rejected(self, dom2):
        c = np.zeros((1,) + dom2.spectral_shape, dtype=complex)
        c[0][mode_index(dom2, (1, 0))] = 1.0
        with pytest.raises(ValueError, match="asymmetry"):
            inverse_transform(SpectralField(dom2, c))

    @pytest.mark.parametrize("dim", [2, 3])
    def test_parseval(self, dim):
        d = DomainSpec(dim, 1.7, 16)
        F = random_field(d, dim, seed=dim, band=False)
        f = inverse_transform(F).samples
        physical = math.sqrt(d.volume * np.mean(np.sum(f**2, axis=0)))
        assert l2_norm(F) == pytest.approx(physical, rel=1e-12)


class TestMultipliers:
    def test_unit_shell_mode_is_fixed_by_every_power(self, dom2):
        F = forward_transform(PhysicalField.from_function(dom2, lambda x, y: np.sin(y)))
        for gamma in (-1.5, -0.3, 0.0, 0.5, 1.0, 2.0):
            assert np.allclose(apply_radial_multiplier(F, fractional_power(gamma)).coeffs, F.coeffs, atol=1e-13)

    def test_lambda_two_is_minus_laplacian(self, dom2):
        F = forward_transform(PhysicalField.from_function(dom2, lambda x, y: np.cos(2 * x)))
        out = inverse_transform(apply_radial_multiplier(F, fractional_power(2.0))).samples[0]
        x, _ = dom2.coordinates()
        assert np.allclose(out, 4 * np.cos(2 * x), atol=1e-12)
        lap = differentiate(differentiate(F, "gradient"), "divergence")
        assert np.allclose(-lap.coeffs, apply_radial_multiplier(F, fractional_power(2.0)).coeffs, atol=1e-13)

    def test_half_power_on_sine(self, dom2):
        F = forward_transform(PhysicalField.from_function(dom2, lambda x, y: np.sin(4 * x)))
        out = inverse_transform(apply_radial_multiplier(F, fractional_power(0.5))).samples[0]
        x, _ = dom2.coordinates()
        assert np.allclose(out, 2 * np.sin(4 * x), atol=1e-12)

    def test_lambda_zero_keeps_the_mean(self, dom2):
        F = random_field(dom2, 1, seed=3)
        assert np.array_equal(apply_radial_multiplier(F, fractional_power(0.0)).coeffs, F.coeffs)

    @settings(max_examples=25, deadline=None)
    @given(gamma=st.floats(-2.0, 2.0), seed=st.integers(0, 2**16))
    def test_composition_with_inverse_power(self, gamma, seed):
        d = DomainSpec(2, 1.3, 16)
        F = random_field(d, 2, seed=seed)
        F = F - SpectralField(d, np.where(d.xi_abs == 0, 1.0, 0.0) * F.coeffs)  # drop the mean
        G = apply_radial_multiplier(apply_radial_multiplier(F, fractional_power(gamma)), fractional_power(-gamma))
        assert np.max(np.abs(G.coeffs - F.coeffs)) <= 1e-12 * np.max(np.abs(F.coeffs))

    def test_singular_symbol_needs_zero_mean(self, dom2):
        F = forward_transform(PhysicalField(dom2, np.ones(dom2.physical_shape)))
        with pytest.raises(ValueError, match="mean"):
            apply_radial_multiplier(F, inverse_laplacian())

    def test_power_out_of_range(self):
        with pytest.raises(ValueError):
            fractional_power(2.5)


class TestLeray:
    def test_annihilates_gradients(self, dom3):
        p = random_field(dom3, 1, seed=1)
        assert np.max(np.abs(leray_project(differentiate(p, "gradient")).coeffs)) < 1e-14

    def test_idempotent_and_divergence_free(self, dom3):
        F = random_field(dom3, 3, seed=2, band=False)
        P = leray_project(F)
        assert np.allclose(leray_project(P).coeffs, P.coeffs, atol=1e-15)
        assert np.max(np.abs(differentiate(P, "divergence").coeffs)) <= 1e-13

    def test_solenoidal_field_unchanged(self, dom2):
        F = forward_transform(PhysicalField.from_function(dom2, lambda x, y: [np.sin(y), 0 * x]))
        assert np.allclose(leray_project(F).coeffs, F.coeffs, atol=1e-15)

    def test_scalar_rejected(self, dom2):
        with pytest.raises(ValueError):
            leray_project(random_field(dom2, 1))


class TestDerivatives:
    def test_3d_curl_single_mode(self, dom3):
        # curl (0, cos z, 0) = (-d_z cos z, 0, 0) = (sin z, 0, 0)
        F = forward_transform(PhysicalField.from_function(dom3, lambda x, y, z: [0 * z, np.cos(z), 0 * z]))
        out = inverse_transform(differentiate(F, "curl")).samples
        _, _, z = dom3.coordinates()
        assert np.allclose(out[0], np.sin(z), atol=1e-13)
        assert np.allclose(out[1:], 0, atol=1e-13)

    def test_2d_curl_sign(self, dom2):
        # curl (0, sin x) = d1 F2 - d2 F1 = cos x
        F = forward_transform(PhysicalField.from_function(dom2, lambda x, y: [0 * x, np.sin(x)]))
        x, _ = dom2.coordinates()
        assert np.allclose(inverse_transform(differentiate(F, "curl")).samples[0], np.cos(x), atol=1e-13)

    def test_perp_of_constant(self, dom2):
        F = forward_transform(PhysicalField(dom2, np.stack([np.ones(dom2.physical_shape), np.zeros(dom2.physical_shape)])))
        out = differentiate(F, "perp")
        assert out.mean == pytest.approx(np.array([0.0, 1.0]))

    def test_kind_errors(self, dom2, dom3):
        with pytest.raises(ValueError):
            differentiate(random_field(dom3, 3), "perp")
        with pytest.raises(ValueError):
            differentiate(random_field(dom3, 1), "curl")
        with pytest.raises(ValueError):
            differentiate(random_field(dom2, 2), "laplacian")


class TestProducts:
    def test_cosine_squared(self, dom2):
        F = forward_transform(PhysicalField.from_function(dom2, lambda x, y: np.cos(x)))
        P = multiply_dealiased(F, F)
        expect = np.zeros_like(P.coeffs)
        expect[0][0, 0] = 0.5
        expect[0][mode_index(dom2, (2, 0))] = 0.25
        expect[0][mode_index(dom2, (-2, 0))] = 0.25
        assert np.max(np.abs(P.coeffs - expect)) <= 1e-13

    def test_zero_velocity_advects_nothing(self, dom2):
        assert not multiply_dealiased(SpectralField.zeros(dom2, 2), random_field(dom2, 2), "advection").coeffs.any()

    @pytest.mark.parametrize("dim", [2, 3])
    @pytest.mark.parametrize("kind", ["pointwise", "dot", "advection", "cross"])
    def test_matches_direct_convolution(self, dim, kind):
        if kind == "cross" and dim == 2:
            pytest.skip("cross product is 3D only")
        d = DomainSpec(dim, 1.4, 16)
        F, G = random_field(d, dim, seed=5, band=False), random_field(d, dim, seed=6, band=False)
        ref = direct_product(F, G, kind).coeffs
        gap = np.max(np.abs(multiply_dealiased(F, G, kind).coeffs - ref))
        assert gap <= 1e-12 * np.max(np.abs(ref))

    def test_scalar_times_vector_matches_convolution(self, dom3):
        s, F = random_field(dom3, 1, seed=7), random_field(dom3, 3, seed=8)
        assert np.allclose(multiply_dealiased(s, F).coeffs, direct_product(s, F).coeffs, atol=1e-14)

    @settings(max_examples=20, deadline=None)
    @given(a=st.floats(-3, 3), b=st.floats(-3, 3), seed=st.integers(0, 1000))
    def test_bilinear(self, a, b, seed):
        d = DomainSpec(2, 1.0, 16)
        F, G, H = (random_field(d, 2, seed=seed + i) for i in range(3))
        lhs = multiply_dealiased(a * F + b * G, H, "advection").coeffs
        rhs = a * multiply_dealiased(F, H, "advection").coeffs + b * multiply_dealiased(G, H, "advection").coeffs
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + np.max(np.abs(rhs)))

    def test_beltrami_self_advection_is_a_gradient(self, dom3):
        # u = (sin z, cos z, 0) has curl u = u, so u.grad u = grad |u|^2/2 and P(u.grad u) = 0
        U = forward_transform(PhysicalField.from_function(dom3, lambda x, y, z: [np.sin(z), np.cos(z), 0 * z]))
        assert np.max(np.abs(leray_project(multiply_dealiased(U, U, "advection")).coeffs)) < 1e-14

    def test_domain_mismatch(self, dom2):
        with pytest.raises(ValueError):
            multiply_dealiased(random_field(dom2, 2), random_field(DomainSpec(2, 2.0, 32), 2))
