"""Versioned JSON round-trip for fitted models."""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import BadSpec
from . import FittedModel, ModelKind
from .bayes import BernoulliNBModel, GaussianNBModel, MultinomialNBModel
from .ensemble import BoostedTreesModel, RandomForestModel
from .linear import LinearSVCModel, LogisticModel
from .neighbors import KNearestModel
from .tree import TreeNode

FORMAT = "tafrisk-model"
VERSION = 1

_STATE_CLASSES = {
    ModelKind.LOGISTIC_REGRESSION: LogisticModel,
    ModelKind.RANDOM_FOREST: RandomForestModel,
    ModelKind.GRADIENT_BOOSTED_TREES: BoostedTreesModel,
    ModelKind.GAUSSIAN_NB: GaussianNBModel,
    ModelKind.MULTINOMIAL_NB: MultinomialNBModel,
    ModelKind.BERNOULLI_NB: BernoulliNBModel,
    ModelKind.K_NEAREST: KNearestModel,
    ModelKind.LINEAR_SVC: LinearSVCModel,
}


def model_to_doc(model: FittedModel) -> dict:
    if isinstance(model.impl, TreeNode):
        state = {"root": model.impl.to_dict()}
    else:
        state = model.impl.state_dict()
    return {
        "format": FORMAT,
        "version": VERSION,
        "kind": model.kind.value,
        "params": model.params,
        "feature_names": model.feature_names,
        "state": state,
    }


def model_from_doc(doc: dict) -> FittedModel:
    if doc.get("format") != FORMAT:
        raise BadSpec(f"not a model document (format = {doc.get('format')!r})")
    if doc.get("version") != VERSION:
        raise BadSpec(f"unsupported model document version {doc.get('version')!r}")
    kind = ModelKind(doc["kind"])
    if kind is ModelKind.DECISION_TREE:
        impl = TreeNode.from_dict(doc["state"]["root"])
    else:
        impl = _STATE_CLASSES[kind].from_state(doc["state"])
    return FittedModel(
        kind=kind,
        params=dict(doc["params"]),
        feature_names=list(doc["feature_names"]),
        impl=impl,
    )


def save_model(model: FittedModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(model_to_doc(model), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_model(path: str | Path) -> FittedModel:
    return model_from_doc(json.loads(Path(path).read_text(encoding="utf-8")))
