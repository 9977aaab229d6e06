import json

import numpy as np
import pytest

import probattn as pa
from probattn.serialize import FORMAT_TAG, model_from_dict, model_to_dict

from conftest import make_model


def roundtrip(tmp_path, model):
    path = tmp_path / "model.json"
    pa.save_model(model, path)
    return pa.load_model(path)


def assert_bit_identical(a, b):
    assert a.tobytes() == b.tobytes()
    assert a.dtype == b.dtype and a.shape == b.shape


@pytest.mark.parametrize("prior_name", ["uniform", "magnitude", "explicit",
                                        "distance", "position_full",
                                        "position_factored"])
def test_round_trip_bit_exact(tmp_path, rng, prior_name):
    n, d, m = 6, 3, 2
    keys = rng.normal(size=(n, d)) * np.pi  # irrational-ish entries
    if prior_name == "uniform":
        prior = pa.UniformPrior()
    elif prior_name == "magnitude":
        prior = pa.MagnitudePrior()
    elif prior_name == "explicit":
        raw = rng.uniform(0.1, 1.0, size=(n, n))
        prior = pa.ExplicitPrior(raw / raw.sum(axis=1, keepdims=True))
    elif prior_name == "distance":
        prior = pa.DistancePrior((2, 3), sigma=1.75)
    else:
        variant = "full" if prior_name.endswith("full") else "factored"
        prior = pa.PositionPrior(
            pa.RelativePE.random((2, 3), d, variant=variant, rng=11)
        )
    model = pa.MixtureModel(
        keys=keys,
        key_precisions=rng.uniform(0.1, 3.0, n),
        value_means=rng.normal(size=(n, m)) / 3.0,
        value_precisions=np.concatenate([[0.0], rng.uniform(0.1, 1.0, n - 1)]),
        prior=prior,
    )
    again = roundtrip(tmp_path, model)
    assert_bit_identical(again.keys, model.keys)
    assert_bit_identical(again.key_precisions, model.key_precisions)
    assert_bit_identical(again.value_means, model.value_means)
    assert_bit_identical(again.value_precisions, model.value_precisions)
    assert type(again.prior) is type(model.prior)
    if prior_name == "explicit":
        assert_bit_identical(again.prior.pi, model.prior.pi)
    if prior_name == "distance":
        assert again.prior.grid == model.prior.grid
        assert again.prior.sigma == model.prior.sigma
    if prior_name.startswith("position"):
        old_pe, new_pe = model.prior.pe, again.prior.pe
        assert new_pe.grid == old_pe.grid and new_pe.variant == old_pe.variant
        if new_pe.variant == "full":
            assert_bit_identical(new_pe.q_table, old_pe.q_table)
            assert_bit_identical(new_pe.k_table, old_pe.k_table)
        else:
            for name in ("q_height", "q_width", "k_height", "k_width"):
                assert_bit_identical(getattr(new_pe, name), getattr(old_pe, name))


def test_format_tag_present_and_checked(tmp_path, rng):
    model = make_model(rng)
    payload = model_to_dict(model)
    assert payload["format"] == FORMAT_TAG == "probattn-model/1"
    payload["format"] = "probattn-model/0"
    with pytest.raises(ValueError, match="unsupported"):
        model_from_dict(payload)


def test_dimension_consistency_checked(rng):
    model = make_model(rng)
    payload = model_to_dict(model)
    payload["d"] += 1
    with pytest.raises(ValueError, match="disagree"):
        model_from_dict(payload)


def test_container_is_plain_json(tmp_path, rng):
    model = make_model(rng)
    path = tmp_path / "m.json"
    pa.save_model(model, path)
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    assert set(data) == {
        "format", "n", "d", "m", "keys", "key_precisions", "value_means",
        "value_precisions", "prior",
    }
