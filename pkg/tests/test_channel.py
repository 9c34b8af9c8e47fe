import numpy as np
import pytest

from densemimo.array_model import ArrayGeometry, Direction, coupling_matrix_closed_form
from densemimo.channel import (
    MultipathSpec,
    complex_normal,
    multipath_channel,
    multipath_channel_arrays,
    rayleigh_channels,
    substream,
)

from conftest import assert_within, sample_covariance_with_stderr


class TestRayleigh:
    def test_identity_coupling_gives_white_channels(self):
        B = np.eye(4)
        draws = np.stack([rayleigh_channels(B, 1, seed=i).H[:, 0] for i in range(10_000)])
        cov, se = sample_covariance_with_stderr(draws)
        assert_within(cov, np.eye(4), se, 5.0)

    def test_coupled_covariance(self):
        B = coupling_matrix_closed_form(ArrayGeometry(0.2, 3))
        H = rayleigh_channels(B, 10_000, seed=7).H.T
        cov, se = sample_covariance_with_stderr(H)
        assert_within(cov, B.entries, se, 5.0)

    def test_same_seed_same_draw(self):
        B = coupling_matrix_closed_form(ArrayGeometry(0.25, 4))
        a = rayleigh_channels(B, 3, seed=11)
        b = rayleigh_channels(B, 3, seed=11)
        assert np.array_equal(a.H, b.H)
        assert a.n_users == 3

    def test_h_is_root_times_s(self):
        B = coupling_matrix_closed_form(ArrayGeometry(0.125, 6))
        ch = rayleigh_channels(B, 2, seed=1)
        np.testing.assert_allclose(ch.H, B.sqrt @ ch.S, atol=1e-14)

    def test_rejects_zero_users(self):
        with pytest.raises(ValueError):
            rayleigh_channels(np.eye(2), 0, seed=0)

    def test_complex_normal_moments(self):
        z = complex_normal(np.random.default_rng(0), 200_000)
        assert np.var(z.real) == pytest.approx(0.5, rel=0.02)
        assert np.var(z.imag) == pytest.approx(0.5, rel=0.02)
        assert abs(np.mean(z.real * z.imag)) < 0.01


class TestSubstream:
    def test_reproducible(self):
        assert substream(3, 0, 25, 7).standard_normal() == substream(3, 0, 25, 7).standard_normal()

    @pytest.mark.parametrize("other", [(1, 25, 7), (0, 49, 7), (0, 25, 8)])
    def test_keys_separate_streams(self, other):
        assert substream(3, 0, 25, 7).standard_normal() != substream(3, *other).standard_normal()


class TestMultipath:
    def test_single_broadside_path(self):
        g = ArrayGeometry(0.3, 3)
        h = multipath_channel(g, MultipathSpec(np.array([1.0]), [Direction(0.0, 0.0)]))
        np.testing.assert_allclose(h, 0.3 * np.ones(9))

    def test_cancelling_paths(self):
        g = ArrayGeometry(0.3, 3)
        d = Direction(0.7, -1.1)
        h = multipath_channel(g, MultipathSpec(np.array([1.0, -1.0]), [d, d]))
        np.testing.assert_allclose(h, 0.0, atol=1e-15)

    def test_multipath_spec_validation(self):
        with pytest.raises(ValueError):
            MultipathSpec(np.array([1.0]), [])
        with pytest.raises(ValueError):
            MultipathSpec(np.array([1.0, 2.0]), [Direction(0.0, 0.0)])

    def test_isotropic_scattering_reproduces_coupling(self):
        # directions uniform over the hemisphere, complex gains of variance 2 pi / Q
        g = ArrayGeometry(0.3, 2)
        B = coupling_matrix_closed_form(g).entries
        rng = np.random.default_rng(5)
        Q, n = 64, 10_000
        theta = np.arccos(rng.uniform(0.0, 1.0, (n, Q)))
        phi = rng.uniform(-np.pi, np.pi, (n, Q))
        gains = complex_normal(rng, (n, Q)) * np.sqrt(2 * np.pi / Q)
        H = np.stack([multipath_channel_arrays(g, gains[i], theta[i], phi[i]) for i in range(n)])
        cov, se = sample_covariance_with_stderr(H)
        assert_within(cov, B, se, 5.0)

    def test_stderr_shrinks_with_samples(self):
        B = np.eye(2)
        se = []
        for n in (1_000, 16_000):
            H = rayleigh_channels(B, n, seed=2).H.T
            se.append(sample_covariance_with_stderr(H)[1][0, 1].real)
        assert se[1] == pytest.approx(se[0] / 4, rel=0.15)
