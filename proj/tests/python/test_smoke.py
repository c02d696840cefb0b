import json
import math

import numpy as np
import pytest

import dwlab


def test_generate_shapes_and_determinism():
    spec = {"class_means": [[-1, 0], [1, 0]], "class_variances": [[1], [1]], "class_counts": [30, 10], "seed": 3}
    x, y = dwlab.generate(spec)
    assert x.shape == (40, 2)
    assert sorted(set(y.tolist())) == [-1, 1]
    x2, y2 = dwlab.generate(spec)
    assert np.array_equal(x, x2) and np.array_equal(y, y2)


def test_closed_form_and_epsilon():
    assert dwlab.closed_form_error(1.0, 0.0) == pytest.approx(math.exp(-1.0))
    assert dwlab.epsilon_term(1.0, 0.5, 100, 0.1) == pytest.approx(0.25656, abs=1e-5)
    with pytest.raises(ValueError):
        dwlab.epsilon_term(1.0, 0.5, 100, 1.0)


def test_max_margin_symmetric_pair():
    direction, gamma = dwlab.max_margin(np.array([[1.0, 1.0], [-1.0, -1.0]]), np.array([1, -1]))
    assert gamma == pytest.approx(math.sqrt(2.0))
    assert direction == pytest.approx([1 / math.sqrt(2.0)] * 2)
    with pytest.raises(dwlab.NotSeparableError):
        dwlab.max_margin(np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([1, -1]))


def test_error_profile_decomposition():
    x, y = dwlab.generate(
        {"class_means": [[-2, 0], [2, 0]], "class_variances": [[1], [1]], "class_counts": [20, 20], "seed": 1}
    )
    cfg = {"folds": 5, "repeats": 6, "family": {"kind": "linear", "loss": {"kind": "squared"}, "hyper": {"epochs": 30}}}
    prof = dwlab.error_profile(x, y, cfg)
    assert prof["err"].shape == (40,)
    assert np.allclose(prof["bias"] + prof["variance"], prof["err"], atol=1e-12)


def test_run_writes_manifest(tmp_path):
    cfg = {"seed": 2, "dataset": {"benchmark": "imbalanced"}}
    m = dwlab.run("gen", cfg, tmp_path / "a")
    assert m["schema_version"] == dwlab.schema_version
    assert [a["path"] for a in m["artifacts"]] == ["dataset.csv"]
    again = dwlab.run("gen", json.dumps(cfg), tmp_path / "b")
    assert again["artifacts"] == m["artifacts"]
    assert dwlab.config_digest(cfg) == m["config_digest"]
