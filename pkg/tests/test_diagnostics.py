import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field
from largemhd.background import BackgroundState
from largemhd.diagnostics.checks import bernstein_check, bootstrap_monitor, energy_balance, lemma33_check
from largemhd.diagnostics.io import SnapshotError, read_csv, read_snapshot, write_csv, write_snapshot
from largemhd.diagnostics.moser import moser_check, moser_constants, moser_ratios, multi_indices, random_band_limited
from largemhd.diagnostics.norms import (
    derivative_linf,
    inner,
    l2_norm,
    linf_norm,
    norm,
    sobolev_norm,
    spectral_l1_norm,
)
from largemhd.diagnostics.records import RECORD_FIELDS, DiagnosticsRecord, dissipation, support_epsilon
from largemhd.initial_data import DataSpec, build_data_2d
from largemhd.spectral import DomainSpec, PhysicalField, SpectralField, forward_transform

UNIT = DomainSpec(2, 1.0, 16)


def sampled(domain, fn):
    F = forward_transform(PhysicalField.from_function(domain, fn))
    c = F.coeffs.copy()
    c[np.abs(c) < 1e-12] = 0
    return SpectralField(domain, c)


def record(t, **kw):
    values = dict.fromkeys(RECORD_FIELDS, 0.0)
    values.update(t=t, bootstrap_ok=True)
    values.update(kw)
    return DiagnosticsRecord(**values)


class TestNormsByHand:
    def setup_method(self):
        self.F = sampled(UNIT, lambda x, y: [np.sin(y), 0 * x])

    def test_l2(self):
        # int sin^2 over [0, 2 pi]^2 = 2 pi^2
        assert l2_norm(self.F) == pytest.approx(math.pi * math.sqrt(2), rel=1e-14)

    def test_h3(self):
        # weight (1 + 1)^3 = 8 on |xi| = 1
        assert sobolev_norm(self.F, 3) == pytest.approx(4 * math.pi, rel=1e-14)
        assert norm(self.F, "H3") == sobolev_norm(self.F, 3) and norm(self.F, 3) == sobolev_norm(self.F, 3)

    def test_sup_and_spectral_l1(self):
        assert linf_norm(self.F) == pytest.approx(1.0, rel=1e-14)
        assert spectral_l1_norm(self.F) == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    def test_derivatives_of_unit_mode(self, order):
        assert derivative_linf(self.F, order) == pytest.approx(1.0, rel=1e-13)

    def test_scale_changes_frequency(self):
        d = DomainSpec(2, 2.0, 16)
        G = sampled(d, lambda x, y: [np.sin(y / 2), 0 * x])
        assert l2_norm(G) == pytest.approx(2 * math.sqrt(2) * math.pi, rel=1e-14)
        assert derivative_linf(G, 1) == pytest.approx(0.5, rel=1e-13)

    def test_inner_of_orthogonal_modes(self):
        G = sampled(UNIT, lambda x, y: [np.cos(y), 0 * x])
        assert abs(inner(self.F, G)) < 1e-14
        assert inner(self.F, self.F) == pytest.approx(l2_norm(self.F) ** 2, rel=1e-14)

    def test_bad_kind_and_index(self):
        with pytest.raises(ValueError):
            norm(self.F, "W3")
        with pytest.raises(ValueError):
            sobolev_norm(self.F, -1.0)


class TestNormProperties:
    def test_h0_is_l2(self, dom2):
        F = random_field(dom2, 2, seed=1)
        assert sobolev_norm(F, 0) == l2_norm(F)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 1000), a=st.floats(-10, 10).filter(lambda v: v == 0 or abs(v) > 1e-100), s=st.sampled_from([0.0, 1.5, 3.0]))
    def test_homogeneous_and_subadditive(self, seed, a, s):
        d = DomainSpec(2, 1.0, 16)
        F, G = random_field(d, 2, seed=seed), random_field(d, 2, seed=seed + 1)
        assert sobolev_norm(a * F, s) == pytest.approx(abs(a) * sobolev_norm(F, s), rel=1e-12)
        assert sobolev_norm(F + G, s) <= (sobolev_norm(F, s) + sobolev_norm(G, s)) * (1 + 1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 1000))
    def test_sup_below_spectral_l1(self, seed):
        F = random_field(DomainSpec(2, 1.0, 16), 2, seed=seed)
        assert linf_norm(F) <= spectral_l1_norm(F) * (1 + 1e-12)

    def test_annulus_h3_bound(self):
        d = DomainSpec(2, 20.0, 128)
        _, _, U0 = build_data_2d(DataSpec(0.1), d)
        assert sobolev_norm(U0, 3) <= (1 + 1.1**2) ** 1.5 * l2_norm(U0)
        assert sobolev_norm(U0, 3) >= (1 + 0.9**2) ** 1.5 * l2_norm(U0)
        assert support_epsilon(U0) <= 0.1
        assert support_epsilon(SpectralField.zeros(d, 2)) == 0.0

    def test_dissipation_of_unit_mode(self):
        F = sampled(UNIT, lambda x, y: [np.sin(y), 0 * x])
        # rate * ||Lambda^(p/2) F||^2 with |xi| = 1 equals rate * ||F||^2 for every p
        for p in (0.0, 1.0, 2.0):
            assert dissipation(F, 0.7, p) == pytest.approx(0.7 * 2 * math.pi**2, rel=1e-14)


class TestSnapshot:
    def test_bit_exact_round_trip(self, tmp_path, dom3):
        F = random_field(dom3, 3, seed=5)
        write_snapshot(F, tmp_path / "f.bin")
        G = read_snapshot(tmp_path / "f.bin")
        assert G.domain == dom3
        assert G.coeffs.tobytes() == F.coeffs.tobytes()

    def test_length_is_header_plus_full_spectrum(self, tmp_path, dom2):
        write_snapshot(random_field(dom2, 2), tmp_path / "f.bin")
        assert (tmp_path / "f.bin").stat().st_size == struct.calcsize("<4sIIIId") + 16 * 2 * 32**2

    def test_truncated(self, tmp_path, dom2):
        p = tmp_path / "f.bin"
        write_snapshot(random_field(dom2, 2), p)
        p.write_bytes(p.read_bytes()[:-16])
        with pytest.raises(SnapshotError, match="length"):
            read_snapshot(p)
        p.write_bytes(b"MH")
        with pytest.raises(SnapshotError, match="header"):
            read_snapshot(p)

    def test_bad_magic_and_version(self, tmp_path, dom2):
        p = tmp_path / "f.bin"
        write_snapshot(random_field(dom2, 2), p)
        raw = bytearray(p.read_bytes())
        p.write_bytes(b"XXXX" + raw[4:])
        with pytest.raises(SnapshotError, match="magic"):
            read_snapshot(p)
        raw[4:8] = struct.pack("<I", 99)
        p.write_bytes(bytes(raw))
        with pytest.raises(SnapshotError, match="version"):
            read_snapshot(p)

    def test_non_hermitian_rejected(self, tmp_path, dom2):
        p = tmp_path / "f.bin"
        write_snapshot(random_field(dom2, 1), p)
        raw = bytearray(p.read_bytes())
        # overwrite the imaginary part of the k = (0, N-1) entry, the mirror of k = (0, 1)
        offset = struct.calcsize("<4sIIIId") + 16 * 31 + 8
        raw[offset:offset + 8] = struct.pack("<d", 5.0)
        p.write_bytes(bytes(raw))
        with pytest.raises(SnapshotError, match="Hermitian"):
            read_snapshot(p)


class TestCSV:
    def test_round_trip_exact(self, tmp_path):
        recs = [record(0.1 * i, h3_v=math.pi * i, bootstrap_ok=i % 2 == 0) for i in range(4)]
        write_csv(recs, tmp_path / "t.csv")
        assert read_csv(tmp_path / "t.csv") == recs
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == ",".join(RECORD_FIELDS) and len(lines) == 5

    def test_header_checked(self, tmp_path):
        (tmp_path / "t.csv").write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="header"):
            read_csv(tmp_path / "t.csv")


class TestBootstrap:
    def test_quiet_run_passes(self):
        rep = bootstrap_monitor([record(t) for t in (0, 1, 2)], eta=1.0)
        assert rep.passed and rep.sup == 0.0 and rep.crossing_time is None

    def test_reports_first_crossing(self):
        recs = [record(0, h3_v=0.5), record(1, h3_v=1.0, h3_c=1.0), record(2, h3_v=3.0)]
        rep = bootstrap_monitor(recs, eta=1.5)
        assert not rep.passed and rep.crossing_time == 1 and rep.sup == 9.0

    def test_rejects(self):
        with pytest.raises(ValueError):
            bootstrap_monitor([record(0)], eta=0.0)
        with pytest.raises(ValueError):
            bootstrap_monitor([], eta=1.0)


class TestEnergyBalance:
    def test_exact_linear_decay(self):
        recs = [record(t, l2_energy=2.0 - 0.5 * t, dissipation_rate=0.5) for t in (0.0, 0.5, 1.0)]
        rep = energy_balance(recs)
        assert rep.passed and rep.max_relative_error == 0.0 and rep.intervals == 2

    def test_flags_missing_energy(self):
        recs = [record(0.0, l2_energy=1.0, dissipation_rate=1.0), record(1.0, l2_energy=0.5, dissipation_rate=1.0)]
        rep = energy_balance(recs)
        assert not rep.passed and rep.max_relative_error == pytest.approx(0.5)

    def test_zero_run_and_single_record(self):
        assert energy_balance([record(0), record(1)]).max_relative_error == 0.0
        assert energy_balance([record(0)]).intervals == 0


class TestLemmaChecks:
    def test_unit_shell_has_no_forcing(self):
        U = sampled(UNIT, lambda x, y: [np.sin(y), 0 * x])
        rep = lemma33_check(BackgroundState(U, 1.0, 0.5, 1.0, 1.5), [0.0, 1.0], epsilon=0.1)
        assert rep.values["max"]["ratio_f"] < 1e-13 and rep.values["max"]["ratio_h"] < 1e-13
        # a shear flow is steady for Euler: its advection vanishes, so does G
        assert rep.values["max"]["ratio_G"] == 0.0
        assert rep.passed

    def test_bernstein_planted_mode(self):
        # (sin 3y, 0): |grad| = 3, |grad^4| = 81, spectral L1 = 1
        W = sampled(UNIT, lambda x, y: [np.sin(3 * y), 0 * x])
        rep = bernstein_check(BackgroundState(W, 1.0, 2.0), 0.5)
        assert rep.values["U"] == pytest.approx(84.0, rel=1e-12)
        assert rep.values["B"] == pytest.approx(84.0, rel=1e-12)
        assert not rep.passed

    def test_annulus_data_within_envelope(self):
        d = DomainSpec(2, 20.0, 128)
        _, _, U0 = build_data_2d(DataSpec(0.1), d)
        equal = lemma33_check(BackgroundState(U0, 1.0, 1.0), [0.0, 1.0, 2.0], 0.1)
        assert equal.passed and max(equal.values["growth"].values()) <= 1e-12
        # with nu < mu the f ratio decays like e^{-(mu - nu) t}: allowed, not growth
        unequal = lemma33_check(BackgroundState(U0, 1.0, 0.5), [0.0, 1.0, 2.0], 0.1)
        assert unequal.passed
        rows = unequal.values["rows"]
        assert rows[2]["ratio_f"] / rows[0]["ratio_f"] == pytest.approx(math.exp(-1.0), rel=1e-12)
        assert bernstein_check(BackgroundState(U0, 1.0, 0.5), 1.0).passed


class TestMoser:
    def test_multi_indices(self):
        assert len(multi_indices(2, 3)) == 10
        assert len(multi_indices(3, 3, 1)) == 19

    def test_constant_factor_has_no_commutator(self):
        d = DomainSpec(2, 1.0, 32)
        f = random_band_limited(d, np.random.default_rng(0))
        c = np.zeros((1,) + d.spectral_shape, dtype=complex)
        c[0, 0, 0] = 2.5
        out = moser_ratios(f, SpectralField(d, c))
        assert out["lhs"]["commutator_a"] == 0.0

    def test_single_mode_by_hand(self):
        # f = sin x, g = 1: sum over |a| <= 3 of ||d^a f|| = 4 ||sin x|| = 4 sqrt(2) pi;
        # ||f||_H3 = 4 pi and ||g||_H3 = 2 pi
        f = sampled(UNIT, lambda x, y: np.sin(x))
        c = np.zeros((1,) + UNIT.spectral_shape, dtype=complex)
        c[0, 0, 0] = 1.0
        out = moser_ratios(f, SpectralField(UNIT, c))
        assert out["lhs"]["product_a"] == pytest.approx(4 * math.sqrt(2) * math.pi, rel=1e-12)
        assert out["ratios"]["product_a"] == pytest.approx(math.sqrt(2) / (2 * math.pi), rel=1e-12)

    def test_seeded_constants_reproducible(self):
        d = DomainSpec(2, 1.0, 32)
        assert moser_constants(5, 3, d) == moser_constants(5, 3, d)
        with pytest.raises(ValueError):
            moser_constants(0, 3, d)

    def test_resolution_independent(self):
        rep = moser_check(5, 0, DomainSpec(2, 1.0, 32), resolutions=(32, 64))
        assert rep.passed
        # quadrature of band-limited L2 pieces is exact; only grid sup norms move
        assert rep.spread["product_a"] == pytest.approx(1.0, abs=1e-12)
        assert all(s <= 1.05 for s in rep.spread.values())
