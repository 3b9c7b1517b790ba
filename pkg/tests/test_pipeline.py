import warnings

import numpy as np
import pytest

from dmm.errors import ConfigError
from dmm.kde import DegenerateBandwidthWarning
from dmm.pipeline import PipelineOptions, fit_pipeline, load_model
from dmm.survey import LabeledDataset, SurveySchema
from dmm.synthetic import GeneratorSpec, experiment_config, generate


def test_disjoint_supports_are_separable(rng):
    # class 0 uses modalities {0,1}, class 1 uses {2,3} in every block
    n = 200
    labels = np.repeat([0, 1], n // 2)
    codes = rng.integers(0, 2, size=(n, 3)) + 2 * labels[:, None]
    ds = LabeledDataset(SurveySchema((4, 4, 4)), codes, labels, 2)
    model = fit_pipeline(ds)
    assert (model.predict(ds) == labels).all()


def test_no_signal_is_chance():
    spec = GeneratorSpec((4,) * 6, 2, (), 0.0, n_train=2000, n_test=2000, seed=5)
    train, test = generate(spec)
    model = fit_pipeline(train)
    acc = float(np.mean(model.predict(test) == test.labels))
    assert abs(acc - 0.5) < 0.08


def test_s1_delta_one_is_perfect():
    cfg = experiment_config("S1", seed=0)
    j = len(cfg.cells) - 1
    train, test = generate(cfg.cells[j].spec, (j,))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateBandwidthWarning)
        model = fit_pipeline(train, cfg.pipeline)
    assert np.mean(model.predict(test) == test.labels) == 1.0


def test_save_and_load(tmp_path, rng):
    spec = GeneratorSpec((3,) * 4, 3, (0, 1), 0.7, n_train=300, n_test=100, seed=1)
    train, test = generate(spec)
    opts = PipelineOptions(variant="class_normalized", smoothing=0.5, kernel="epanechnikov",
                           priors="empirical")
    model = fit_pipeline(train, opts)
    path = tmp_path / "m.json"
    model.save(path)
    back = load_model(path)
    assert back.options == opts
    for rule in ("ml", "map"):
        np.testing.assert_array_equal(back.predict(test, rule), model.predict(test, rule))


def test_load_garbage(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("{}")
    with pytest.raises(ConfigError):
        load_model(p)


def test_options_reject_unknown_keys():
    with pytest.raises(ConfigError):
        PipelineOptions.from_dict({"kernal": "gaussian"})
