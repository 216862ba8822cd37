import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from icstream.core import LabeledExample, Schema


@pytest.fixture
def schema2():
    return Schema.numeric(n_features=2, n_classes=2)


def make_example(features, label, arrival):
    return LabeledExample(
        features=np.asarray(features, dtype=np.float64),
        label=label,
        arrival_index=arrival,
    )
