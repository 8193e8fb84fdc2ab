import numpy as np
import pytest

from fastspec.affinity import AffinityParams
from fastspec.image_io import GrayImage


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_image(arr) -> GrayImage:
    """Wrap a plain array as a GrayImage without padding."""
    a = np.asarray(arr, dtype=np.float64)
    return GrayImage(data=a, pad_right=0, pad_bottom=0)


@pytest.fixture
def tiny_params():
    # broad radii so small test images stay fully connected
    return AffinityParams(r=5.0, R=10.0, sigma_x=4.0, sigma_i=0.05,
                          sigma_c=0.2, alpha=0.45)
