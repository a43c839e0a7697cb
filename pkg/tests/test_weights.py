import math

import numpy as np
import pytest

from extremescore.weights import WeightSpec


def test_quantile_chain_is_positive_part():
    w = WeightSpec.quantile(1.5)
    assert w.chain([0.0, 1.5, 4.0]).tolist() == [0.0, 0.0, 2.5]
    assert w.density([1.0, 2.0]).tolist() == [0.0, 1.0]
    assert w.threshold == 1.5


def test_unweighted_has_no_threshold():
    w = WeightSpec.unweighted()
    assert w.threshold == -math.inf
    assert w.chain([-2.0, 3.0]).tolist() == [-2.0, 3.0]


def test_affine_components_split_linearly():
    w = WeightSpec.indicator_plus_level(2.0)
    parts = w.components()
    assert [c for c, _ in parts] == [1.0, 2.0]
    assert parts[0][1].kind == "unweighted"
    assert parts[1][1] == WeightSpec.quantile(2.0)

    x = np.linspace(-3, 6, 19)
    combined = sum(c * part.chain(x) for c, part in parts)
    np.testing.assert_allclose(w.chain(x), combined)


def test_indicator_only_affine_is_single_component():
    w = WeightSpec.affine(0.0, 1.0, 0.5)
    assert w.components() == [(1.0, WeightSpec.quantile(0.5))]


def test_invalid_weights_rejected():
    with pytest.raises(ValueError):
        WeightSpec(kind="quantile")
    with pytest.raises(ValueError):
        WeightSpec(kind="affine", a=0.0, b=0.0)
    with pytest.raises(ValueError):
        WeightSpec(kind="affine", a=1.0, b=1.0)
