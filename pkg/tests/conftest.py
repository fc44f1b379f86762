"""Session fixtures: trained priors shared by the acceptance suite.

Training is the expensive part of the suite (minutes per prior), so each
prior is trained once per session and handed around as a checkpoint
directory. All seeds are fixed constants; every downstream result is
deterministic.
"""

from types import SimpleNamespace

import pytest

from vesselprior import funcprior, synthgen
from vesselprior.funcprior import GanConfig


def _train_prior(directory, layout, n_train, epochs, data_seed, train_seed,
                 mu_range=None):
    overrides = {"mu": mu_range} if mu_range else {}
    ranges = synthgen.ParamRanges.default(**overrides)
    dataset = synthgen.generate_dataset(ranges, layout, n_train, seed=data_seed)
    trained = funcprior.train(dataset, GanConfig(epochs=epochs, seed=train_seed))
    funcprior.save_prior(directory, trained)
    return SimpleNamespace(dir=str(directory), generator=trained.generator,
                           discriminator=trained.discriminator,
                           dataset=dataset, history=trained.history)


@pytest.fixture(scope="session")
def acceptance_tmp(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="session")
def prior_1d(acceptance_tmp):
    """Line-layout prior at the Case-I acceptance scale (N=1000, 25k iters)."""
    return _train_prior(acceptance_tmp / "prior_1d", synthgen.line_layout(),
                        n_train=1000, epochs=25000, data_seed=101,
                        train_seed=202)


@pytest.fixture(scope="session")
def prior_2d_main(acceptance_tmp):
    """Grid-layout energy-mode prior, N=1000 (case II variants, appendix C)."""
    return _train_prior(acceptance_tmp / "prior_2d_main", synthgen.grid_layout(),
                        n_train=1000, epochs=6000, data_seed=303,
                        train_seed=404)


@pytest.fixture(scope="session")
def prior_2d_small(acceptance_tmp):
    return _train_prior(acceptance_tmp / "prior_2d_small", synthgen.grid_layout(),
                        n_train=500, epochs=6000, data_seed=303,
                        train_seed=404)


@pytest.fixture(scope="session")
def prior_2d_big(acceptance_tmp):
    return _train_prior(acceptance_tmp / "prior_2d_big", synthgen.grid_layout(),
                        n_train=2000, epochs=6000, data_seed=303,
                        train_seed=404)


@pytest.fixture(scope="session")
def prior_2d_ood(acceptance_tmp):
    """Prior trained with the restricted shear-modulus range (OOD study)."""
    return _train_prior(acceptance_tmp / "prior_2d_ood", synthgen.grid_layout(),
                        n_train=1000, epochs=6000, data_seed=505,
                        train_seed=606, mu_range=(15.0, 20.0))
