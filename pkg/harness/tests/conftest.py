import pytest

from pbharness_testlib import fabricate_dataset, grid_images


@pytest.fixture
def tiny_manifest(tmp_path):
    """A 24-image, two-class fabricated dataset at 32x32, p=8."""
    images = grid_images(n_per_class=12, size=32, seed=3)
    return fabricate_dataset(tmp_path / "ds", images, p=8, n_bs=4, n_ps=0)
