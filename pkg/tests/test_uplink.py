import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from densemimo.array_model import ArrayGeometry, coupling_matrix_closed_form
from densemimo.channel import rayleigh_channels
from densemimo.exceptions import DegenerateCovarianceError, RankDeficiencyError
from densemimo.uplink import (
    UplinkConfig,
    total_noise_covariance,
    uplink_asymptotic_loss,
    uplink_ideal_rates,
    uplink_one_bit_rates,
    uplink_rate_report,
    uplink_uqn_rates_isotropic,
)


def dense_setup(M=100, K=2, seed=0, aperture=2.5):
    B = coupling_matrix_closed_form(ArrayGeometry.fixed_aperture(aperture, M))
    return B, rayleigh_channels(B, K, seed=seed)


class TestNoiseCovariance:
    def test_ideal_receiver(self):
        B = coupling_matrix_closed_form(ArrayGeometry(0.3, 3)).entries
        np.testing.assert_allclose(total_noise_covariance(B, UplinkConfig([1.0], 1.0)), B)

    def test_uncoupled(self):
        np.testing.assert_allclose(total_noise_covariance(np.eye(3), UplinkConfig([1.0], 2.0)), 2 * np.eye(3))

    @pytest.mark.parametrize("NF", [1.0, 2.0, 5.0])
    def test_bounded_by_noise_figure(self, NF):
        B = coupling_matrix_closed_form(ArrayGeometry.fixed_aperture(2.5, 196))
        C = total_noise_covariance(B, UplinkConfig([1.0], NF))
        assert np.linalg.eigvalsh(C)[-1] <= NF * (1 + 1e-9)


class TestIdealRates:
    @pytest.mark.parametrize("M", [1, 4, 9])
    def test_single_user_matched_filter(self, M):
        h = np.exp(1j * np.linspace(0, 3, M))[:, None]  # |h|^2 = M
        r = uplink_ideal_rates(h, np.eye(M), UplinkConfig([2.0], 1.0))
        assert r[0] == pytest.approx(np.log2(1 + 2 * M), rel=1e-12)

    def test_orthogonal_users(self):
        H = np.eye(4)[:, :2]
        r = uplink_ideal_rates(H, np.eye(4), UplinkConfig([2.0, 2.0], 1.0))
        np.testing.assert_allclose(r, np.log2(3.0), rtol=1e-12)

    def test_rank_deficient(self):
        h = np.ones((3, 1))
        with pytest.raises(RankDeficiencyError):
            uplink_ideal_rates(np.hstack([h, h]), np.eye(3), UplinkConfig([1.0, 1.0], 1.0))

    def test_degenerate_noise(self):
        with pytest.raises(DegenerateCovarianceError):
            uplink_ideal_rates(np.ones((2, 1)), np.zeros((2, 2)), UplinkConfig([1.0], 1.0))


class TestOneBitRates:
    def test_single_antenna_modes_agree(self):
        h = np.array([[0.7 - 0.2j]])
        cfg = UplinkConfig([2.0], 2.0)
        ex = uplink_one_bit_rates(h, np.eye(1), cfg, "exact")
        uq = uplink_one_bit_rates(h, np.eye(1), cfg, "uqn")
        np.testing.assert_allclose(ex, uq, rtol=1e-12)

    def test_single_antenna_closed_form(self):
        g, snr, NF = 0.8, 2.0, 2.0
        cfg = UplinkConfig([snr], NF)
        r = uplink_one_bit_rates(np.array([[np.sqrt(g)]]), np.eye(1), cfg, "exact")[0]
        Dy = snr * g + NF
        sinr = (2 / np.pi) * snr * g / (Dy - (2 / np.pi) * snr * g)
        assert r == pytest.approx(np.log2(1 + sinr), rel=1e-12)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            uplink_one_bit_rates(np.ones((1, 1)), np.eye(1), UplinkConfig([1.0]), "hybrid")

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000), M=st.sampled_from([25, 49, 100]), K=st.integers(1, 3))
    def test_one_bit_never_beats_ideal(self, seed, M, K):
        B, ch = dense_setup(M, K, seed)
        rep = uplink_rate_report(ch.H, B, UplinkConfig([2.0] * K, 2.0))
        assert np.all(rep.one_bit_exact <= rep.ideal + 1e-12)
        assert np.all(rep.one_bit_uqn <= rep.ideal + 1e-12)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000), c=st.floats(1e-3, 1e3))
    def test_scale_invariance(self, seed, c):
        B, ch = dense_setup(25, 2, seed)
        base = uplink_rate_report(ch.H, B, UplinkConfig([2.0, 3.0], 2.0, n0=1.0))
        scaled = uplink_rate_report(ch.H, B, UplinkConfig([2.0 * c, 3.0 * c], 2.0, n0=c))
        for a, b in [(base.ideal, scaled.ideal), (base.one_bit_exact, scaled.one_bit_exact),
                     (base.one_bit_uqn, scaled.one_bit_uqn)]:
            np.testing.assert_allclose(a, b, rtol=1e-8)

    def test_metadata_passthrough(self):
        B, ch = dense_setup(25, 2, 1)
        assert uplink_rate_report(ch.H, B, UplinkConfig([2.0, 2.0]), M=25).metadata == {"M": 25}


class TestAsymptoticLoss:
    def test_ideal_receiver(self):
        assert uplink_asymptotic_loss(1.0) == 1.0

    def test_noise_figure_two(self):
        assert uplink_asymptotic_loss(2.0) == pytest.approx(2 / (1 + np.pi / 2), rel=1e-15)
        assert uplink_asymptotic_loss(2.0) == pytest.approx(0.777969, abs=1e-6)

    def test_limit(self):
        assert uplink_asymptotic_loss(1e12) == pytest.approx(2 / np.pi, rel=1e-9)
        assert uplink_asymptotic_loss(np.inf) == 2 / np.pi

    def test_monotone(self):
        vals = [uplink_asymptotic_loss(nf) for nf in (1, 1.5, 2, 4, 10)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_domain(self):
        with pytest.raises(ValueError):
            uplink_asymptotic_loss(0.5)


class TestIsotropicDiagnostic:
    def test_close_to_exact_diagonal_uqn_when_dense(self):
        B, ch = dense_setup(400, 2, 3)
        cfg = UplinkConfig([2.0, 2.0], 2.0)
        diag = uplink_uqn_rates_isotropic(ch.S, B, cfg)
        exact_d = uplink_one_bit_rates(ch.H, B, cfg, "uqn")
        np.testing.assert_allclose(diag, exact_d, rtol=0.1)

    def test_requires_spacing_without_geometry(self):
        with pytest.raises(ValueError):
            uplink_uqn_rates_isotropic(np.ones((2, 1)), np.eye(2), UplinkConfig([1.0]))
