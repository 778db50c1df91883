import numpy as np
import pytest

import topica
from topica.estimation import TrainConfig, train


@pytest.fixture(scope="session")
def small_images():
    return [topica.normalize_image(topica.generate_dead_leaves(128, 128, 90, seed=s))
            for s in (11, 12, 13)]


@pytest.fixture(scope="session")
def small_patches(small_images):
    return topica.extract_patches_from_images(small_images, 5, 3000, seed=3)


@pytest.fixture(scope="session")
def small_whitening(small_patches):
    return topica.fit_whitening(small_patches, 16)


@pytest.fixture(scope="session")
def small_topo():
    return topica.build_topography(4, 4, 1)


@pytest.fixture(scope="session")
def small_tica(small_patches, small_whitening, small_topo):
    return train(small_patches, small_whitening, small_topo,
                 TrainConfig(seed=5, max_iters=40, tol=1e-5))


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
