"""Model container: a versioned, self-describing JSON document.

Floats are written with Python's shortest round-trip repr, so a load
reproduces every array bit-exactly. Non-finite values are rejected (the
model invariants already forbid them).
"""

from __future__ import annotations

import json

import numpy as np

from .model import (
    DistancePrior,
    ExplicitPrior,
    MagnitudePrior,
    MixtureModel,
    PositionPrior,
    RelativePE,
    UniformPrior,
)

FORMAT_TAG = "probattn-model/1"


def _pe_payload(pe):
    payload = {"variant": pe.variant, "grid": list(pe.grid)}
    if pe.variant == "full":
        payload["q_table"] = pe.q_table.tolist()
        payload["k_table"] = pe.k_table.tolist()
    else:
        payload["q_height"] = pe.q_height.tolist()
        payload["q_width"] = pe.q_width.tolist()
        payload["k_height"] = pe.k_height.tolist()
        payload["k_width"] = pe.k_width.tolist()
    return payload


def _pe_from_payload(payload):
    grid = tuple(payload["grid"])
    if payload["variant"] == "full":
        return RelativePE(
            grid=grid,
            variant="full",
            q_table=np.asarray(payload["q_table"], dtype=np.float64),
            k_table=np.asarray(payload["k_table"], dtype=np.float64),
        )
    return RelativePE(
        grid=grid,
        variant="factored",
        q_height=np.asarray(payload["q_height"], dtype=np.float64),
        q_width=np.asarray(payload["q_width"], dtype=np.float64),
        k_height=np.asarray(payload["k_height"], dtype=np.float64),
        k_width=np.asarray(payload["k_width"], dtype=np.float64),
    )


def _prior_payload(prior):
    if isinstance(prior, UniformPrior):
        return {"variant": "uniform"}
    if isinstance(prior, MagnitudePrior):
        return {"variant": "magnitude"}
    if isinstance(prior, ExplicitPrior):
        return {"variant": "explicit", "pi": prior.pi.tolist()}
    if isinstance(prior, DistancePrior):
        return {
            "variant": "distance",
            "grid": list(prior.grid),
            "sigma": prior.sigma,
        }
    if isinstance(prior, PositionPrior):
        return {"variant": "position", "pe": _pe_payload(prior.pe)}
    raise TypeError(f"cannot serialize prior {type(prior)!r}")


def _prior_from_payload(payload):
    variant = payload["variant"]
    if variant == "uniform":
        return UniformPrior()
    if variant == "magnitude":
        return MagnitudePrior()
    if variant == "explicit":
        return ExplicitPrior(np.asarray(payload["pi"], dtype=np.float64))
    if variant == "distance":
        return DistancePrior(tuple(payload["grid"]), payload["sigma"])
    if variant == "position":
        return PositionPrior(_pe_from_payload(payload["pe"]))
    raise ValueError(f"unknown prior variant {variant!r}")


def model_to_dict(model):
    return {
        "format": FORMAT_TAG,
        "n": model.n,
        "d": model.d,
        "m": model.m,
        "keys": model.keys.tolist(),
        "key_precisions": model.key_precisions.tolist(),
        "value_means": model.value_means.tolist(),
        "value_precisions": model.value_precisions.tolist(),
        "prior": _prior_payload(model.prior),
    }


def model_from_dict(data):
    tag = data.get("format")
    if tag != FORMAT_TAG:
        raise ValueError(f"unsupported model format {tag!r}")
    model = MixtureModel(
        keys=np.asarray(data["keys"], dtype=np.float64),
        key_precisions=np.asarray(data["key_precisions"], dtype=np.float64),
        value_means=np.asarray(data["value_means"], dtype=np.float64),
        value_precisions=np.asarray(data["value_precisions"], dtype=np.float64),
        prior=_prior_from_payload(data["prior"]),
    )
    if (model.n, model.d, model.m) != (data["n"], data["d"], data["m"]):
        raise ValueError("container dimensions disagree with its arrays")
    return model


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, allow_nan=False)


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
