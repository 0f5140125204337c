import numpy as np
import pytest

from vcbot.config import LayerSpec, NetworkConfig, RunConfig
from vcbot.dataset import encode_primitives, macaw_cub_primitives
from vcbot.params import init_params, tie_posterior_to_prior
from vcbot.training import train


def tiny_network(seed: int = 0, dof: int = 1, bins: int = 4) -> NetworkConfig:
    return NetworkConfig(
        layers=[LayerSpec(3, 1, 2.0), LayerSpec(2, 1, 5.0)],
        dof=dof, softmax_bins=bins, w=[0.1, 0.15], seed=seed,
    )


@pytest.fixture
def tiny_config():
    return tiny_network()


@pytest.fixture
def tiny_params(tiny_config):
    return init_params(tiny_config, np.random.default_rng(1))


@pytest.fixture
def tied_params(tiny_config):
    params = init_params(tiny_config, np.random.default_rng(1))
    tie_posterior_to_prior(params)
    return params


class DemoModel:
    """Desk-scale training artifacts shared across the acceptance suite."""

    def __init__(self):
        self.config = RunConfig()
        self.pset = macaw_cub_primitives()
        self.tset = encode_primitives(self.pset, self.config.network)
        self.result = train(self.tset, self.config, epochs=5000, report_every=1)

    @property
    def params(self):
        return self.result.params

    @property
    def window(self):
        return self.result.window


@pytest.fixture(scope="session")
def demo_model():
    return DemoModel()


@pytest.fixture(scope="session")
def trained_observer(demo_model):
    from vcbot.analysis import rollout_positions_by_label
    from vcbot.observer import (
        init_observer,
        observer_train,
        observer_training_pairs,
    )

    config = demo_model.config
    rollouts = rollout_positions_by_label(
        demo_model.params, demo_model.window, config, demo_model.tset.labels,
        config.observer.rollout_steps,
    )
    inputs, targets = observer_training_pairs(
        rollouts, config.observer, demo_model.tset.labels
    )
    net = init_observer(
        config.observer, demo_model.tset.labels, config.network.dof,
        np.random.default_rng(config.seed + 1),
    )
    observer_train(inputs, targets, net, config.observer.epochs)
    return net
