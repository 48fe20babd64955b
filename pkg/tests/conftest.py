import os
from pathlib import Path

import pytest

from imbn import synthdigits
from imbn.dataset import load_raw_mnist
from imbn.synthdigits import CORPUS_VERSION, FILE_NAMES

REPO_ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CACHE = REPO_ROOT / ".cache" / "mnist-synth"
CORPUS_SEED = 0


def _has_all_files(path: Path) -> bool:
    return all((path / name).exists() for name in FILE_NAMES.values())


@pytest.fixture(scope="session")
def data_dir() -> Path:
    """Directory with the four split files.

    IMBN_DATA_DIR wins when it points at existing files (e.g. the real
    handwritten corpus); otherwise a synthetic corpus is generated once and
    cached under .cache/.
    """
    env = os.environ.get("IMBN_DATA_DIR")
    if env and _has_all_files(Path(env)):
        return Path(env)
    marker = DEFAULT_CACHE / ".meta"
    stamp = f"seed={CORPUS_SEED} version={CORPUS_VERSION}"
    if not (_has_all_files(DEFAULT_CACHE) and marker.exists() and marker.read_text() == stamp):
        synthdigits.generate_corpus(DEFAULT_CACHE, seed=CORPUS_SEED)
        marker.write_text(stamp)
    return DEFAULT_CACHE


@pytest.fixture(scope="session")
def raw_splits(data_dir):
    """(train RawMnist, test RawMnist) for the session corpus."""
    train = load_raw_mnist(
        data_dir / FILE_NAMES["train_images"], data_dir / FILE_NAMES["train_labels"]
    )
    test = load_raw_mnist(
        data_dir / FILE_NAMES["test_images"], data_dir / FILE_NAMES["test_labels"]
    )
    return train, test
