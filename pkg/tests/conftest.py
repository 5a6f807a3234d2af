import numpy as np
import pytest

from scalelab.data import Dataset, preprocess, write_cifar_records, write_idx
from scalelab.rng import SeededRng

C = 10
SIDE = 28


def class_template_images(n, noise_seed, template_seed=11, noise=60.0):
    """MNIST-shaped uint8 images: per-class templates plus Gaussian noise.

    All splits share the templates (the class structure); only the noise
    stream differs, so train and eval are drawn from the same task.
    """
    d = SIDE * SIDE
    trng = SeededRng(template_seed)
    templates = np.clip(trng.gaussian(C, d), 0, None)
    templates = templates / templates.max() * 255.0
    nrng = SeededRng(noise_seed)
    idx = np.arange(n) % C
    imgs = np.clip(0.5 * templates[idx] + noise * nrng.gaussian(n, d), 0, 255)
    return imgs.astype(np.uint8).reshape(n, SIDE, SIDE), idx.astype(np.uint8)


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    """Dataset root with MNIST-layout IDX files and CIFAR-10 batch files."""
    root = tmp_path_factory.mktemp("datasets")
    mnist = root / "mnist"
    mnist.mkdir()
    tr_imgs, tr_labels = class_template_images(1200, noise_seed=21)
    ev_imgs, ev_labels = class_template_images(400, noise_seed=22)
    write_idx(tr_imgs, mnist / "train-images-idx3-ubyte")
    write_idx(tr_labels, mnist / "train-labels-idx1-ubyte")
    write_idx(ev_imgs, mnist / "t10k-images-idx3-ubyte")
    write_idx(ev_labels, mnist / "t10k-labels-idx1-ubyte")

    cifar = root / "cifar10"
    cifar.mkdir()
    rng = SeededRng(33)
    for name in [f"data_batch_{i}.bin" for i in range(1, 6)] + ["test_batch.bin"]:
        n = 20
        images = (np.abs(rng.gaussian(n, 3072)) * 80).clip(0, 255).astype(np.uint8)
        labels = (np.arange(n) % 10).astype(np.uint8)
        write_cifar_records(images, labels, cifar / name)
    return root


@pytest.fixture(scope="session")
def image_train_eval(dataset_dir):
    from scalelab.data import load_idx

    mnist = dataset_dir / "mnist"
    train_set = preprocess(
        load_idx(mnist / "train-images-idx3-ubyte"),
        load_idx(mnist / "train-labels-idx1-ubyte"),
        subsample_n=1000,
        seed=3,
        split="train",
        name="fixture-mnist",
    )
    eval_set = preprocess(
        load_idx(mnist / "t10k-images-idx3-ubyte"),
        load_idx(mnist / "t10k-labels-idx1-ubyte"),
        split="eval",
        name="fixture-mnist",
    )
    return train_set, eval_set
