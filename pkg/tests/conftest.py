import numpy as np
import pandas as pd
import pytest


def write_classification_csv(path, rows=600, classes=7, features=9, seed=0):
    """Synthetic CSV shaped like the statlog shuttle data: numeric features and
    a class column in the last position."""
    rng = np.random.default_rng(seed)
    labels = np.arange(rows) % classes
    rng.shuffle(labels)
    centers = rng.normal(scale=3.0, size=(classes, features))
    x = centers[labels] + rng.normal(size=(rows, features))
    frame = pd.DataFrame(x, columns=[f"f{i}" for i in range(features)])
    frame["label"] = [f"c{k}" for k in labels]
    frame.to_csv(path, index=False)
    return path


@pytest.fixture
def statlog_csv(tmp_path):
    return write_classification_csv(tmp_path / "statlog.csv")
