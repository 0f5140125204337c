import numpy as np
import pytest

from vcbot.config import LayerSpec, NetworkConfig
from vcbot.errors import ConfigError
from vcbot.network import (
    context_step,
    decode_output,
    generate_prior,
    initial_state,
    posterior_rollout,
    posterior_stats,
    prior_stats,
    sample_z,
)
from vcbot.params import LayerParams, NetworkParams, init_params, tie_posterior_to_prior


def scalar_layer(w_mu=0.0, b_mu=0.0, w_sig=0.0, b_sig=0.0):
    """1-d, 1-z layer with explicit head values and zero context maps."""
    z = lambda *shape: np.zeros(shape)
    return LayerParams(
        w_dh_rec=z(1, 1), w_dh_bu=None, w_dh_td=None, w_zh=z(1, 1), b_h=z(1),
        w_mu_p=np.array([[w_mu]]), b_mu_p=np.array([b_mu]),
        w_sig_p=np.array([[w_sig]]), b_sig_p=np.array([b_sig]),
        w_mu_q=np.array([[w_mu]]), b_mu_q=np.array([b_mu]),
        w_sig_q=np.array([[w_sig]]), b_sig_q=np.array([b_sig]),
    )


class TestPriorStats:
    def test_zero_map_gives_standard_normal(self):
        lp = scalar_layer()
        mu, rho = prior_stats(np.array([0.37]), lp)
        assert mu[0] == 0.0 and rho[0] == 0.0

    def test_scalar_oracle(self):
        lp = scalar_layer(w_mu=1.0)
        mu, _ = prior_stats(np.array([0.5]), lp)
        assert mu[0] == pytest.approx(0.46211715726000974, abs=1e-12)

    def test_constant_sigma_head(self):
        lp = scalar_layer(b_sig=-1.0)
        for d in (-0.9, 0.0, 0.4):
            _, rho = prior_stats(np.array([d]), lp)
            assert np.exp(rho[0]) == pytest.approx(0.36787944117144233, abs=1e-12)

    def test_shape_mismatch_is_config_error(self):
        with pytest.raises(ConfigError):
            prior_stats(np.zeros(3), scalar_layer())


class TestPosteriorStats:
    def test_zero_adaptation_equals_prior(self, tied_params):
        d = np.array([0.2, -0.1, 0.4])
        lp = tied_params.layers[0]
        zp = np.zeros(1)
        assert np.allclose(prior_stats(d, lp), posterior_stats(d, zp, zp, lp))

    def test_mu_oracle(self):
        lp = scalar_layer()
        mu, _ = posterior_stats(np.array([0.9]), np.array([0.3]), np.zeros(1), lp)
        assert mu[0] == pytest.approx(0.2913126124515909, abs=1e-12)

    def test_sigma_oracle(self):
        lp = scalar_layer()
        _, rho = posterior_stats(np.array([0.0]), np.zeros(1), np.array([0.7]), lp)
        assert np.exp(rho[0]) == pytest.approx(2.0137527074704766, abs=1e-12)


class TestSampleZ:
    def test_zero_eps_returns_mean(self):
        assert sample_z(np.array([0.4]), np.array([1.3]), np.zeros(1))[0] == 0.4

    def test_unit_sigma(self):
        assert sample_z(np.zeros(1), np.zeros(1), np.array([1.5]))[0] == 1.5

    def test_scalar_oracle(self):
        z = sample_z(np.array([0.2]), np.array([np.log(2.0)]), np.array([-1.0]))
        assert z[0] == pytest.approx(-1.8, abs=1e-12)


class TestContextStep:
    def one_unit(self, timescale, w=0.0, b=0.0):
        config = NetworkConfig(
            layers=[LayerSpec(1, 1, timescale)], dof=1, softmax_bins=2
        )
        lp = scalar_layer()
        lp.w_zh = np.array([[w]])
        lp.b_h = np.array([b])
        params = NetworkParams(
            layers=[lp], w_out=np.zeros((1, 2, 1)), b_out=np.zeros((1, 2))
        )
        return config, params

    def test_unit_timescale_is_memoryless(self):
        config, params = self.one_unit(1.0, w=1.0)
        h, _ = context_step([np.array([5.0])], [np.zeros(1)], [np.array([0.7])],
                            params, config)
        assert h[0][0] == pytest.approx(0.7)

    def test_zero_inputs_decay_geometrically(self):
        config, params = self.one_unit(4.0)
        h, _ = context_step([np.array([1.0])], [np.zeros(1)], [np.zeros(1)],
                            params, config)
        assert h[0][0] == pytest.approx(0.75)

    def test_scalar_oracle(self):
        config, params = self.one_unit(2.0, b=0.6)
        h, d = context_step([np.array([1.0])], [np.zeros(1)], [np.zeros(1)],
                            params, config)
        assert h[0][0] == pytest.approx(0.8, abs=1e-12)
        assert d[0][0] == pytest.approx(0.6640367702678491, abs=1e-12)


class TestDecodeOutput:
    def test_equal_logits_give_uniform(self):
        params = NetworkParams(
            layers=[], w_out=np.zeros((1, 4, 2)), b_out=np.zeros((1, 4))
        )
        frame = decode_output(np.array([0.3, -0.2]), params)
        assert np.allclose(frame, 0.25)

    def test_saturation(self):
        b = np.array([[30.0, -30.0]])
        params = NetworkParams(layers=[], w_out=np.zeros((1, 2, 1)), b_out=b)
        frame = decode_output(np.zeros(1), params)
        assert frame[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_two_bin_oracle(self):
        b = np.array([[1.0, 0.0]])
        params = NetworkParams(layers=[], w_out=np.zeros((1, 2, 1)), b_out=b)
        frame = decode_output(np.zeros(1), params)
        assert frame[0, 0] == pytest.approx(0.7310585786300049, abs=1e-12)
        assert frame[0, 1] == pytest.approx(0.2689414213699951, abs=1e-12)


class TestRollouts:
    def test_zeros_eps_generation_is_deterministic(self, tiny_config, tiny_params):
        init = initial_state(tiny_config)
        r1 = generate_prior(init, 20, tiny_params, tiny_config, eps_mode="zeros")
        r2 = generate_prior(init, 20, tiny_params, tiny_config, eps_mode="zeros")
        assert np.array_equal(r1.outputs, r2.outputs)

    def test_zero_steps_rejected(self, tiny_config, tiny_params):
        with pytest.raises(ValueError):
            generate_prior(initial_state(tiny_config), 0, tiny_params, tiny_config)

    def test_bounds_hold_everywhere(self, tiny_config, tiny_params):
        init = initial_state(tiny_config)
        rollout = generate_prior(
            init, 50, tiny_params, tiny_config, eps_mode="sampled",
            rng=np.random.default_rng(3),
        )
        for k in range(tiny_config.n_layers):
            assert np.all(np.abs(rollout.d[k]) < 1.0)
        assert np.all(rollout.outputs > 0)

    def test_tied_heads_zero_adaptation_matches_prior(self, tiny_config):
        params = init_params(tiny_config, np.random.default_rng(4))
        tie_posterior_to_prior(params)
        T = 12
        rng = np.random.default_rng(9)
        eps = [rng.standard_normal((T, s.z_units)) for s in tiny_config.layers]
        zeros = [np.zeros((T, s.z_units)) for s in tiny_config.layers]
        init = initial_state(tiny_config)
        post = posterior_rollout(init, zeros, zeros, eps, params, tiny_config)

        state = init
        from vcbot.network import prior_step

        for t in range(T):
            state, frame = prior_step(
                state, params, tiny_config, [e[t] for e in eps]
            )
            assert np.allclose(frame, post.outputs[t], atol=1e-12)
            for k in range(tiny_config.n_layers):
                assert np.allclose(state.d[k], post.d[k][t], atol=1e-12)
