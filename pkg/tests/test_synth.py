import numpy as np

from gradlab import synth
from gradlab.dataset import load_idx


def test_generate_is_deterministic(tmp_path):
    a = synth.generate(tmp_path / "a", n_train=50, n_test=20, seed=3)
    b = synth.generate(tmp_path / "b", n_train=50, n_test=20, seed=3)
    for key in a:
        pa, pb = a[key], b[key]
        assert open(pa, "rb").read() == open(pb, "rb").read()
    c = synth.generate(tmp_path / "c", n_train=50, n_test=20, seed=4)
    assert open(a["train_images"], "rb").read() != open(c["train_images"], "rb").read()


def test_generated_files_load_as_dataset(tmp_path):
    paths = synth.generate(tmp_path, n_train=300, n_test=60, seed=0)
    train = load_idx(paths["train_images"], paths["train_labels"])
    test = load_idx(paths["test_images"], paths["test_labels"])
    assert train.count == 300 and test.count == 60
    assert train.feature_dim == 784
    assert train.num_classes == 10
    assert train.images.min() >= 0.0 and train.images.max() <= 1.0
    assert set(np.unique(train.labels)).issubset(set(range(10)))


def test_classes_are_separated(tmp_path):
    # nearest-centroid classification should already work well
    paths = synth.generate(tmp_path, n_train=400, n_test=10, seed=1)
    train = load_idx(paths["train_images"], paths["train_labels"])
    centroids = np.stack(
        [train.images[train.labels == k].mean(axis=0) for k in range(10)]
    )
    dists = np.linalg.norm(train.images[:, None, :] - centroids[None], axis=2)
    predicted = dists.argmin(axis=1)
    assert (predicted == train.labels).mean() > 0.9


def test_prototypes_shape_and_range():
    protos = synth.class_prototypes(seed=0)
    assert protos.shape == (10, 28, 28)
    assert protos.max() <= 1.0 + 1e-12
    assert (protos >= 0).all()
