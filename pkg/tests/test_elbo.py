import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vcbot.config import LayerSpec, NetworkConfig
from vcbot.elbo import ElboParts, elbo_terms, kl_gaussian, reconstruction_error
from vcbot.network import LatentState, Rollout


class TestKlGaussian:
    def test_identical_distributions_give_zero(self):
        mu = np.array([0.3, -1.2])
        sig = np.array([0.7, 2.0])
        assert np.allclose(kl_gaussian(mu, sig, mu, sig), 0.0)

    def test_mean_shift_oracle(self):
        kl = kl_gaussian(np.array([1.0]), np.ones(1), np.zeros(1), np.ones(1))
        assert kl[0] == pytest.approx(0.5, abs=1e-12)

    def test_scale_oracle(self):
        kl = kl_gaussian(np.zeros(1), np.array([2.0]), np.zeros(1), np.ones(1))
        assert kl[0] == pytest.approx(0.8068528194400546, abs=1e-12)

    def test_nonpositive_sigma_rejected(self):
        with pytest.raises(ValueError):
            kl_gaussian(np.zeros(1), np.zeros(1), np.zeros(1), np.ones(1))
        with pytest.raises(ValueError):
            kl_gaussian(np.zeros(1), np.ones(1), np.zeros(1), np.array([-1.0]))

    @settings(max_examples=300, deadline=None)
    @given(
        st.floats(-5, 5), st.floats(-5, 5),
        st.floats(0.01, 10), st.floats(0.01, 10),
    )
    def test_nonnegative_everywhere(self, mq, mp, sq, sp):
        kl = kl_gaussian(np.array([mq]), np.array([sq]), np.array([mp]), np.array([sp]))
        assert kl[0] >= -1e-12


def single_step_rollout(x_frame, mu_q, rho_q, mu_p, rho_p, config):
    """Hand-built one-step posterior rollout for bound oracles."""
    zeros_d = [np.zeros((1, s.d_units)) for s in config.layers]
    wrap = lambda v: [np.array([[v]], dtype=np.float64)]
    return Rollout(
        init=LatentState(h=[z[0] for z in zeros_d], d=[z[0] for z in zeros_d]),
        h=zeros_d, d=zeros_d,
        z=wrap(0.0), eps=wrap(0.0),
        mu_p=wrap(mu_p), rho_p=wrap(rho_p),
        mu_q=wrap(mu_q), rho_q=wrap(rho_q),
        outputs=np.asarray(x_frame, dtype=np.float64).reshape(1, 1, -1),
    )


ONE_LAYER = NetworkConfig(
    layers=[LayerSpec(1, 1, 1.0)], dof=1, softmax_bins=2, w=[1.0]
)


class TestElbo:
    def test_single_step_oracle(self):
        # x = softmax((1, 0)), target one-hot, identical latent stats (KL = 0)
        rollout = single_step_rollout(
            [0.7310585786300049, 0.2689414213699951], 0.0, 0.0, 0.0, 0.0, ONE_LAYER
        )
        targets = np.array([[[1.0, 0.0]]])
        parts = elbo_terms(targets, rollout, ONE_LAYER)
        assert parts.regulation == pytest.approx(0.0, abs=1e-15)
        assert parts.elbo == pytest.approx(-0.3132616875182228, abs=1e-12)

    def test_w_zero_ignores_divergence(self):
        config = NetworkConfig(
            layers=[LayerSpec(1, 1, 1.0)], dof=1, softmax_bins=2, w=[0.0]
        )
        rollout = single_step_rollout([0.5, 0.5], 1.0, 0.3, -1.0, -0.5, config)
        parts = elbo_terms(np.array([[[0.5, 0.5]]]), rollout, config)
        assert parts.regulation == 0.0

    def test_matching_output_reaches_gibbs_bound(self):
        target = np.array([[[0.3, 0.7]]])
        rollout = single_step_rollout([0.3, 0.7], 0.0, 0.0, 0.0, 0.0, ONE_LAYER)
        parts = elbo_terms(target, rollout, ONE_LAYER)
        entropy = -float(np.sum(target * np.log(target)))
        assert parts.accuracy == pytest.approx(-entropy, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.01, 0.99), st.floats(0.01, 0.99))
    def test_accuracy_below_entropy_bound(self, p, q):
        # Gibbs: cross-entropy >= entropy, equality iff distributions match.
        target = np.array([[[p, 1 - p]]])
        rollout = single_step_rollout([q, 1 - q], 0.0, 0.0, 0.0, 0.0, ONE_LAYER)
        parts = elbo_terms(target, rollout, ONE_LAYER)
        entropy = -float(np.sum(target * np.log(target)))
        assert parts.accuracy <= -entropy + 1e-12
        assert parts.regulation >= 0.0

    def test_length_mismatch_rejected(self):
        rollout = single_step_rollout([0.5, 0.5], 0.0, 0.0, 0.0, 0.0, ONE_LAYER)
        with pytest.raises(ValueError):
            elbo_terms(np.zeros((2, 1, 2)), rollout, ONE_LAYER)


def test_reconstruction_error_zero_iff_equal():
    frames = np.array([[[0.2, 0.8]], [[0.6, 0.4]]])
    assert reconstruction_error(frames, frames) == pytest.approx(0.0, abs=1e-12)
    other = np.array([[[0.3, 0.7]], [[0.6, 0.4]]])
    assert reconstruction_error(frames, other) > 0.0


def test_elbo_parts_signs():
    parts = ElboParts(accuracy=-2.0, regulation=0.5)
    assert parts.elbo == -2.5
    assert parts.nelbo == 2.5
