import numpy as np
import pytest

from secjam.channel import (
    ChannelRealization,
    ScenarioConfig,
    path_loss,
    realize_channel,
    sample_small_scale,
    shannon_capacity,
    sinr,
)


def make_cfg(**kw):
    return ScenarioConfig(**kw)


class TestScenarioConfig:
    def test_default_counts(self):
        cfg = make_cfg()
        assert cfg.n_aps == 3 and cfg.n_users == 3 and cfg.n_eves == 2
        assert cfg.n_receivers == 5

    def test_user_to_ap_permutation_required(self):
        with pytest.raises(ValueError):
            make_cfg(user_to_ap=(0, 0, 1))

    @pytest.mark.parametrize(
        "kw",
        [
            {"p_max": -1.0},
            {"noise_power": 0.0},
            {"path_loss_exponent": 1.5},
            {"ref_distance": 0.0},
            {"ref_gain": -1e-3},
        ],
    )
    def test_invalid_parameters(self, kw):
        with pytest.raises(ValueError):
            make_cfg(**kw)

    def test_positions_inside_ref_distance_rejected(self):
        with pytest.raises(ValueError):
            make_cfg(user_positions=((0.5, 0.0), (50.0, 0.0), (0.0, 50.0)))


class TestPathLoss:
    def test_reference_distance_identity(self):
        cfg = make_cfg(ref_distance=1.0, ref_gain=1e-3, path_loss_exponent=3.0)
        assert path_loss(1.0, cfg) == pytest.approx(1e-3, rel=1e-12)

    def test_decade_factor(self):
        cfg = make_cfg(ref_distance=1.0, ref_gain=1e-3, path_loss_exponent=3.0)
        assert path_loss(10.0, cfg) == pytest.approx(1e-6, rel=1e-12)

    def test_inverse_square(self):
        cfg = make_cfg(ref_distance=1.0, ref_gain=1.0, path_loss_exponent=2.0)
        assert path_loss(2.0, cfg) == pytest.approx(0.25, rel=1e-12)

    def test_domain_error(self):
        cfg = make_cfg()
        with pytest.raises(ValueError):
            path_loss(0.5, cfg)

    @pytest.mark.parametrize("alpha", [2.0, 2.5, 3.0, 4.0])
    def test_monotone_decreasing_positive(self, alpha):
        cfg = make_cfg(path_loss_exponent=alpha)
        d = np.linspace(1.0, 200.0, 100)
        g = path_loss(d, cfg)
        assert np.all(g > 0)
        assert np.all(np.diff(g) < 0)


class TestSmallScale:
    def test_statistics(self):
        rng = np.random.default_rng(7)
        draws = sample_small_scale(rng, size=1_000_000)
        assert np.mean(draws) == pytest.approx(1.0, abs=0.01)
        assert np.var(draws) == pytest.approx(1.0, abs=0.02)
        # P(|h|^2 <= 1) = 1 - exp(-1)
        assert np.mean(draws <= 1.0) == pytest.approx(0.6321, abs=0.005)


class TestRealizeChannel:
    def test_unit_fading_gives_path_loss_matrix(self):
        cfg = make_cfg()
        pl = cfg.path_loss_matrix()
        ch = realize_channel(cfg, np.random.default_rng(0), small_scale=np.ones_like(pl))
        np.testing.assert_allclose(ch.gains, pl, rtol=1e-12)

    def test_expectation_matches_path_loss(self):
        cfg = make_cfg()
        rng = np.random.default_rng(3)
        acc = np.zeros((cfg.n_aps, cfg.n_receivers))
        n = 40_000
        for _ in range(n):
            acc += realize_channel(cfg, rng).gains
        np.testing.assert_allclose(acc / n, cfg.path_loss_matrix(), rtol=0.025)

    def test_seed_determinism(self):
        cfg = make_cfg()
        a = realize_channel(cfg, np.random.default_rng(42)).gains
        b = realize_channel(cfg, np.random.default_rng(42)).gains
        np.testing.assert_array_equal(a, b)

    def test_negative_gain_rejected(self):
        with pytest.raises(ValueError):
            ChannelRealization(gains=np.array([[-1.0]]))


# chosen by hand; users are receivers 0-2, eavesdroppers 3-4
FROZEN_GAINS = np.array(
    [
        [1.0e-6, 2.0e-8, 1.0e-8, 5.0e-8, 3.0e-8],
        [2.0e-8, 8.0e-7, 3.0e-8, 4.0e-8, 6.0e-8],
        [1.0e-8, 2.0e-8, 9.0e-7, 2.0e-8, 4.0e-8],
    ]
)


def frozen_channel_case():
    cfg = make_cfg()
    return cfg, ChannelRealization(gains=FROZEN_GAINS)


class TestSinr:
    def one_link_cfg(self, noise):
        return ScenarioConfig(
            ap_positions=((0.0, 0.0),),
            user_positions=((10.0, 0.0),),
            eve_positions=(),
            user_to_ap=(0,),
            noise_power=noise,
        )

    def test_no_interference(self):
        cfg = self.one_link_cfg(noise=1.0)
        ch = ChannelRealization(gains=np.array([[1.0]]))
        assert sinr(0, 0, [1.0], ch, cfg) == pytest.approx(1.0, rel=1e-12)

    def test_signal_two_interference_one_noise_one(self):
        cfg = ScenarioConfig(
            ap_positions=((0.0, 0.0), (60.0, 0.0)),
            user_positions=((10.0, 0.0), (50.0, 0.0)),
            eve_positions=(),
            user_to_ap=(0, 1),
            p_max=2.0,
            noise_power=1.0,
        )
        ch = ChannelRealization(gains=np.array([[2.0], [1.0]]))
        assert sinr(0, 0, [1.0, 1.0], ch, cfg) == pytest.approx(1.0, rel=1e-12)

    def test_frozen_matrix_against_scalar_oracle(self):
        cfg, ch = frozen_channel_case()
        p = np.array([0.7, 0.4, 0.9])
        for rx in range(cfg.n_receivers):
            for ap in range(cfg.n_aps):
                # straight-line evaluation of the definition
                num = p[ap] * FROZEN_GAINS[ap, rx]
                den = cfg.noise_power
                for other in range(cfg.n_aps):
                    if other != ap:
                        den += p[other] * FROZEN_GAINS[other, rx]
                assert sinr(rx, ap, p, ch, cfg) == pytest.approx(
                    num / den, rel=1e-12
                )

    def test_homogeneity_in_power_and_noise(self):
        cfg, ch = frozen_channel_case()
        p = np.array([0.3, 0.8, 0.5])
        c = 7.0
        cfg_scaled = make_cfg(noise_power=cfg.noise_power * c)
        for rx in range(cfg.n_receivers):
            assert sinr(rx, 0, c * p, ch, cfg_scaled) == pytest.approx(
                sinr(rx, 0, p, ch, cfg), rel=1e-12
            )

    def test_nonserving_power_never_helps(self):
        cfg, ch = frozen_channel_case()
        rng = np.random.default_rng(5)
        for _ in range(50):
            p = rng.uniform(0, 1, 3)
            base = sinr(0, 0, p, ch, cfg)
            for jammer in (1, 2):
                bumped = p.copy()
                bumped[jammer] = min(1.0, bumped[jammer] + 0.1)
                assert sinr(0, 0, bumped, ch, cfg) <= base + 1e-15


class TestShannonCapacity:
    @pytest.mark.parametrize("s,expected", [(0.0, 0.0), (1.0, 1.0), (3.0, 2.0)])
    def test_values(self, s, expected):
        assert shannon_capacity(s) == pytest.approx(expected, abs=1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            shannon_capacity(-0.1)

    def test_monotone(self):
        s = np.linspace(0, 50, 200)
        c = [shannon_capacity(x) for x in s]
        assert np.all(np.diff(c) > 0)
