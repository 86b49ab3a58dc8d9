"""Versioned JSON checkpoints for branch nets and forests."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .forest import ForestModel, Tree
from .net import BranchNet

__all__ = ["save_model", "load_model", "NET_FORMAT", "FOREST_FORMAT"]

NET_FORMAT = "vqakit-branchnet-v1"
FOREST_FORMAT = "vqakit-forest-v1"


def _net_to_dict(net: BranchNet) -> dict:
    return {
        "format": NET_FORMAT,
        "feature_names": list(net.feature_names),
        "groups": {b: list(fs) for b, fs in net.groups.items()},
        "embed_dim": net.embed_dim,
        "head_hidden": net.head_hidden,
        "gate_dropout": net.gate_dropout,
        "seed": net.seed,
        "norm_fitted": net.norm_fitted,
        "norm_shift": net.norm_shift.tolist(),
        "norm_scale": net.norm_scale.tolist(),
        "params": {k: net.params[k].tolist() for k in net.param_names()},
    }


def _net_from_dict(d: dict) -> BranchNet:
    params = {k: np.array(v, dtype=np.float64) for k, v in d["params"].items()}
    # scalar biases serialize as plain numbers
    for k, v in params.items():
        if v.ndim == 0:
            params[k] = np.array(float(v))
    return BranchNet(
        tuple(d["feature_names"]),
        {b: tuple(fs) for b, fs in d["groups"].items()},
        int(d["embed_dim"]),
        int(d["head_hidden"]),
        float(d["gate_dropout"]),
        params,
        np.array(d["norm_shift"], dtype=np.float64),
        np.array(d["norm_scale"], dtype=np.float64),
        bool(d["norm_fitted"]),
        int(d["seed"]),
    )


def _forest_to_dict(model: ForestModel) -> dict:
    return {
        "format": FOREST_FORMAT,
        "n_trees": model.n_trees,
        "seed": model.seed,
        "max_depth": model.max_depth,
        "min_leaf": model.min_leaf,
        "feature_fraction": model.feature_fraction,
        "feature_names": list(model.feature_names) if model.feature_names else None,
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "value": t.value.tolist(),
            }
            for t in model.trees
        ],
    }


def _forest_from_dict(d: dict) -> ForestModel:
    trees = tuple(
        Tree(
            np.array(t["feature"], dtype=np.intp),
            np.array(t["threshold"], dtype=np.float64),
            np.array(t["left"], dtype=np.intp),
            np.array(t["right"], dtype=np.intp),
            np.array(t["value"], dtype=np.float64),
        )
        for t in d["trees"]
    )
    return ForestModel(
        trees,
        int(d["n_trees"]),
        int(d["seed"]),
        int(d["max_depth"]),
        int(d["min_leaf"]),
        float(d["feature_fraction"]),
        tuple(d["feature_names"]) if d.get("feature_names") else None,
    )


def save_model(path, model: BranchNet | ForestModel):
    if isinstance(model, BranchNet):
        d = _net_to_dict(model)
    elif isinstance(model, ForestModel):
        d = _forest_to_dict(model)
    else:
        raise TypeError(f"cannot checkpoint {type(model).__name__}")
    Path(path).write_text(json.dumps(d))


def load_model(path) -> BranchNet | ForestModel:
    d = json.loads(Path(path).read_text())
    fmt = d.get("format")
    if fmt == NET_FORMAT:
        return _net_from_dict(d)
    if fmt == FOREST_FORMAT:
        return _forest_from_dict(d)
    raise ValueError(f"unknown checkpoint format {fmt!r}")
