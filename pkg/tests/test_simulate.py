import numpy as np
import pytest
from scipy import signal

from fuzzcoh import ConfigError, SimConfig, contaminate, gen_ar2, gen_block, gen_dataset, save_csv
from fuzzcoh.dependence import kendall_tau
from fuzzcoh.simulate import apportion, ar2_coefficients, default_mixing, switching_indicator


class TestAr2:
    def test_deterministic(self):
        a = gen_ar2(512, 10.0, seed=5)
        b = gen_ar2(512, 10.0, seed=5)
        np.testing.assert_array_equal(a, b)

    def test_standardized(self):
        x = gen_ar2(2048, 6.0, seed=0)
        assert x.mean() == pytest.approx(0.0, abs=1e-12)
        assert x.std() == pytest.approx(1.0, abs=1e-12)

    def test_spectral_peak_near_target(self):
        # single realization: periodogram argmax within 1 Hz of the target
        x = gen_ar2(4096, 10.0, damping=1.05, seed=1)
        freqs, power = signal.periodogram(x, fs=128.0)
        assert abs(freqs[np.argmax(power)] - 10.0) <= 1.0

    def test_heavy_damping_near_white(self):
        # coefficients shrink toward zero as damping grows
        phi1, phi2 = ar2_coefficients(20.0, 40.0, 128.0)
        assert abs(phi1) < 0.06 and abs(phi2) < 0.001
        x = gen_ar2(4096, 20.0, damping=40.0, seed=2)
        rho1 = np.corrcoef(x[:-1], x[1:])[0, 1]
        assert abs(rho1) <= 0.05

    def test_stationary_for_any_damping(self):
        for damping in (1.01, 1.05, 2.0, 100.0):
            _, phi2 = ar2_coefficients(10.0, damping, 128.0)
            assert -1.0 < phi2 < 0.0

    def test_bad_args(self):
        with pytest.raises(ConfigError):
            gen_ar2(100, 70.0, sample_rate_hz=128.0, seed=0)  # above Nyquist
        with pytest.raises(ConfigError):
            gen_ar2(100, 10.0, damping=0.9, seed=0)


class TestIndicator:
    def test_iid_occupancy_tight(self):
        rng = np.random.default_rng(0)
        fracs = [
            np.mean(switching_indicator(384, rng, 0.5, 0.5) == 0) for _ in range(50)
        ]
        assert all(0.3 < f < 0.7 for f in fracs)
        assert np.mean(fracs) == pytest.approx(0.5, abs=0.02)

    def test_markov_rate_and_occupancy(self):
        rng = np.random.default_rng(1)
        runs = [switching_indicator(384, rng, 0.5, 1 / 64) for _ in range(300)]
        switches = np.mean([np.abs(np.diff(d)).sum() / (len(d) - 1) for d in runs])
        occupancy = np.mean([np.mean(d == 0) for d in runs])
        assert switches == pytest.approx(1 / 64, rel=0.2)
        assert occupancy == pytest.approx(0.5, abs=0.05)

    def test_asymmetric_occupancy(self):
        rng = np.random.default_rng(2)
        d = switching_indicator(50_000, rng, 0.75, 0.2)
        assert np.mean(d == 0) == pytest.approx(0.75, abs=0.02)


class TestMixing:
    def test_group_swap_structure(self):
        rng = np.random.default_rng(0)
        a0, a1 = default_mixing(4, 4, 5, rng)
        np.testing.assert_array_equal(a1[:4], a0[4:])
        np.testing.assert_array_equal(a1[4:], a0[:4])

    def test_row_norms_equal_signal_gain(self):
        rng = np.random.default_rng(1)
        a0, a1 = default_mixing(4, 4, 5, rng, signal_gain=3.0)
        np.testing.assert_allclose(np.linalg.norm(a0, axis=1), 3.0, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(a1, axis=1), 3.0, atol=1e-12)

    def test_dominant_latent_assignment(self):
        rng = np.random.default_rng(2)
        a0, _ = default_mixing(4, 4, 5, rng, gain=3.0)
        # X rows dominated by latent 1 (6 Hz), Y rows by latent 3 (20 Hz)
        assert np.all(a0[:4, 1] == a0[:4].max(axis=1))
        assert np.all(a0[4:, 3] == a0[4:].max(axis=1))

    def test_uneven_groups_recycled(self):
        rng = np.random.default_rng(3)
        a0, a1 = default_mixing(3, 5, 5, rng)
        assert a0.shape == (8, 5) and a1.shape == (8, 5)


class TestGenBlock:
    def test_pure_block_exact_reconstruction(self):
        cfg = SimConfig(seed=9, n_blocks=4, block_length=96)
        block = gen_block(cfg, 0, (9, 7, 0))
        # replay the stream: latents first, then the noise draw
        from fuzzcoh.simulate import _mixing_for

        a0, _ = _mixing_for(cfg)
        rng = np.random.default_rng([9, 7, 0])
        latents = np.column_stack([
            gen_ar2(96, f, cfg.damping, cfg.sample_rate_hz, rng=rng, burn_in=cfg.burn_in)
            for f in cfg.target_freqs
        ])
        clean = latents @ a0.T
        noise = block.data - clean
        np.testing.assert_allclose(noise, rng.standard_normal(noise.shape), atol=1e-12)

    def test_determinism(self):
        cfg = SimConfig(seed=1, n_blocks=2, block_length=64)
        a = gen_block(cfg, 2, (1, 7, 0))
        b = gen_block(cfg, 2, (1, 7, 0))
        np.testing.assert_array_equal(a.data, b.data)

    def test_fuzzy_occupancy_in_range(self):
        cfg = SimConfig(seed=3, n_blocks=2, block_length=384)
        # occupancy is checked through the indicator distribution directly
        rng = np.random.default_rng(0)
        frac = np.mean(
            switching_indicator(384, rng, cfg.fuzzy_switch_prob, cfg.fuzzy_switch_rate) == 0
        )
        assert 0.3 < frac < 0.7

    def test_cauchy_noise_has_extreme_values(self):
        cfg = SimConfig(seed=4, n_blocks=2, block_length=384, noise_family="student_t1")
        hits = 0
        for b in range(20):
            block = gen_block(cfg, 0, (4, 7, b))
            hits += np.abs(block.data).max() > 50.0
        assert hits >= 18  # heavy tails: extreme values in nearly every block

    def test_bad_kind(self):
        cfg = SimConfig(seed=0, n_blocks=1, block_length=64)
        with pytest.raises(ConfigError):
            gen_block(cfg, 3, (0, 7, 0))

    def test_mixing_shape_validation(self):
        with pytest.raises(ConfigError, match="shape"):
            SimConfig(seed=0, mixing_a0=np.ones((3, 5)), mixing_a1=np.ones((3, 5)))


class TestGenDataset:
    def test_default_dimensions(self):
        cfg = SimConfig(seed=0)
        ds = gen_dataset(cfg)
        total = sum(b.n_samples for b in ds.blocks)
        assert total == 115_200
        assert ds.blocks[0].n_channels == 8
        assert ds.n_blocks == 300

    def test_apportionment(self):
        assert apportion(60, (0.4, 0.4, 0.2)) == [24, 24, 12]
        assert apportion(10, (1.0, 0.0, 0.0)) == [10, 0, 0]
        assert sum(apportion(7, (0.5, 0.3, 0.2))) == 7

    def test_all_pure_dataset(self):
        cfg = SimConfig(seed=2, n_blocks=10, block_length=64, proportions=(1.0, 0.0, 0.0))
        ds = gen_dataset(cfg)
        assert all(b.label == 0 for b in ds.blocks)

    def test_byte_identical_export(self, tmp_path):
        cfg = SimConfig(seed=5, n_blocks=6, block_length=64)
        for name in ("a.csv", "b.csv"):
            save_csv(gen_dataset(cfg), tmp_path / name)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_latents_mutually_independent(self):
        # max |cross-tau| between distinct latent series stays near zero
        cfg = SimConfig(seed=6, n_blocks=1, block_length=64)
        rng = np.random.default_rng(0)
        series = [
            gen_ar2(4096, f, cfg.damping, cfg.sample_rate_hz, rng=rng)
            for f in cfg.target_freqs
        ]
        worst = max(
            abs(kendall_tau(series[i], series[j]))
            for i in range(5) for j in range(i + 1, 5)
        )
        assert worst <= 0.1

    def test_classes_distinguishable_in_feature_space(self):
        from fuzzcoh import extract_features

        cfg = SimConfig(seed=7, n_blocks=20, block_length=384,
                        proportions=(0.5, 0.5, 0.0))
        ds = gen_dataset(cfg)
        kinds = np.array([b.label for b in ds.blocks])
        feats = extract_features(ds, max_lag=5).d_matrix
        c0, c1 = feats[kinds == 0].mean(0), feats[kinds == 1].mean(0)
        inter = np.linalg.norm(c0 - c1)
        intra = 0.5 * (
            np.linalg.norm(feats[kinds == 0] - c0, axis=1).mean()
            + np.linalg.norm(feats[kinds == 1] - c1, axis=1).mean()
        )
        assert inter > intra


class TestContaminate:
    def make(self):
        cfg = SimConfig(seed=8, n_blocks=4, block_length=64)
        return gen_dataset(cfg)

    def test_zero_scale_identity(self):
        ds = self.make()
        out = contaminate(ds, ["X1"], scale=0.0, seed=1)
        for a, b in zip(ds.blocks, out.blocks):
            np.testing.assert_array_equal(a.data, b.data)

    def test_only_selected_channels_change(self):
        ds = self.make()
        chans = ["X1", "X3", "Y2"]
        out = contaminate(ds, chans, scale=0.1, seed=1)
        names = ds.channel_names
        touched = [names.index(c) for c in chans]
        for a, b in zip(ds.blocks, out.blocks):
            for c in range(a.n_channels):
                if c in touched:
                    assert np.any(a.data[:, c] != b.data[:, c])
                else:
                    np.testing.assert_array_equal(a.data[:, c], b.data[:, c])

    def test_deterministic(self):
        ds = self.make()
        a = contaminate(ds, ["Y1"], scale=0.1, seed=3)
        b = contaminate(ds, ["Y1"], scale=0.1, seed=3)
        for x, y in zip(a.blocks, b.blocks):
            np.testing.assert_array_equal(x.data, y.data)

    def test_errors(self):
        ds = self.make()
        with pytest.raises(ConfigError):
            contaminate(ds, [], seed=0)
        with pytest.raises(ConfigError):
            contaminate(ds, ["nope"], seed=0)
