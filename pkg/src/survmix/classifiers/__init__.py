"""Binary classifiers behind one fit/predict/save interface.

Seven algorithms are available under fixed names:

========  =====================================================
rpart     greedy binary tree, Gini impurity
tree      greedy binary tree, entropy (deviance)
ctree     permutation-test splitting with Bonferroni adjustment
bag       bootstrap-aggregated Gini trees
logit     logistic regression (Newton with step-halving)
nb        Gaussian/Laplace naive Bayes
ann       single-hidden-layer backpropagation network
========  =====================================================

``fit(train, ClassifierSpec(...))`` returns a model object exposing
``predict_proba(data)``; ``save_model``/``load_model`` round-trip any model
through a versioned JSON document.
"""

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Mapping

from ..dataset import Dataset
from ..errors import DataError, DomainError
from ..fileio import atomic_write_text, read_text
from ._encoding import DummyEncoder, FeatureSchema
from .bagging import BaggingModel, BagParams, bootstrap_indices, fit_bagging
from .logistic import LogitModel, LogitParams, fit_logit
from .naive_bayes import NaiveBayesModel, NbParams, fit_naive_bayes
from .neural import AnnModel, AnnParams, fit_ann
from .trees import (CtreeParams, DecisionTreeModel, TreeParams, fit_cart,
                    fit_ctree, fit_tree)

ALGORITHMS = ("rpart", "tree", "ctree", "bag", "logit", "nb", "ann")

_FORMAT = "survmix-classifier"
_VERSION = 1

# flat parameter-name -> dataclass field, per algorithm
_PARAM_FIELDS = {
    "rpart": {f.name: f for f in dataclasses.fields(TreeParams)},
    "tree": {f.name: f for f in dataclasses.fields(TreeParams)},
    "ctree": {f.name: f for f in dataclasses.fields(CtreeParams)},
    "bag": {**{f.name: f for f in dataclasses.fields(BagParams) if f.name != "tree"},
            **{f.name: f for f in dataclasses.fields(TreeParams)}},
    "logit": {f.name: f for f in dataclasses.fields(LogitParams)},
    "nb": {f.name: f for f in dataclasses.fields(NbParams)},
    "ann": {f.name: f for f in dataclasses.fields(AnnParams)},
}


@dataclass(frozen=True)
class ClassifierSpec:
    """What to fit: algorithm name, seed, and hyperparameter overrides."""

    algorithm: str
    seed: int = 0
    params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise DomainError(
                f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        unknown = set(self.params) - set(_PARAM_FIELDS[self.algorithm])
        if unknown:
            valid = ", ".join(sorted(_PARAM_FIELDS[self.algorithm]))
            raise DomainError(
                f"unknown parameter(s) {sorted(unknown)} for {self.algorithm}; valid: {valid}")


def _coerce(value, kind):
    if kind is bool:
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in ("true", "1", "yes"):
            return True
        if text in ("false", "0", "no"):
            return False
        raise DomainError(f"expected a boolean, got {value!r}")
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise DomainError(f"expected {kind.__name__}, got {value!r}") from None


def _field_type(field_obj):
    if isinstance(field_obj.type, type):
        return field_obj.type
    return {"int": int, "float": float, "bool": bool}[field_obj.type]


def build_params(spec: ClassifierSpec):
    """The per-algorithm parameter object for a spec, defaults filled in."""
    fields = _PARAM_FIELDS[spec.algorithm]
    values = {name: _coerce(raw, _field_type(fields[name]))
              for name, raw in spec.params.items()}
    if spec.algorithm in ("rpart", "tree"):
        return TreeParams(**values)
    if spec.algorithm == "ctree":
        return CtreeParams(**values)
    if spec.algorithm == "bag":
        tree_keys = {f.name for f in dataclasses.fields(TreeParams)}
        tree = TreeParams(**{k: v for k, v in values.items() if k in tree_keys})
        rest = {k: v for k, v in values.items() if k not in tree_keys}
        return BagParams(tree=tree, **rest)
    if spec.algorithm == "logit":
        return LogitParams(**values)
    if spec.algorithm == "nb":
        return NbParams(**values)
    return AnnParams(**values)


def fit(train: Dataset, spec: ClassifierSpec):
    """Fit the requested classifier on a complete training dataset."""
    params = build_params(spec)
    if spec.algorithm == "rpart":
        return fit_cart(train, params)
    if spec.algorithm == "tree":
        return fit_tree(train, params)
    if spec.algorithm == "ctree":
        return fit_ctree(train, params, seed=spec.seed)
    if spec.algorithm == "bag":
        return fit_bagging(train, params, seed=spec.seed)
    if spec.algorithm == "logit":
        return fit_logit(train, params)
    if spec.algorithm == "nb":
        return fit_naive_bayes(train, params)
    return fit_ann(train, params, seed=spec.seed)


def algorithm_of(model) -> str:
    """The algorithm name a fitted model belongs to."""
    if isinstance(model, DecisionTreeModel):
        return model.algorithm
    if isinstance(model, BaggingModel):
        return "bag"
    if isinstance(model, LogitModel):
        return "logit"
    if isinstance(model, NaiveBayesModel):
        return "nb"
    if isinstance(model, AnnModel):
        return "ann"
    raise DomainError(f"not a classifier model: {type(model).__name__}")


def save_model(model, path) -> None:
    document = {"format": _FORMAT, "version": _VERSION,
                "algorithm": algorithm_of(model), "state": model.to_state()}
    atomic_write_text(path, json.dumps(document, sort_keys=True) + "\n")


def load_model(path):
    try:
        document = json.loads(read_text(path))
    except json.JSONDecodeError as exc:
        raise DataError(f"model file {path} is not valid JSON: {exc}") from None
    if not isinstance(document, dict) or document.get("format") != _FORMAT:
        raise DataError(f"model file {path} is not a classifier document")
    if document.get("version") != _VERSION:
        raise DataError(f"model file {path} has unsupported version "
                        f"{document.get('version')!r} (expected {_VERSION})")
    algorithm = document.get("algorithm")
    state = document.get("state")
    if algorithm in ("rpart", "tree", "ctree"):
        return DecisionTreeModel.from_state(algorithm, state)
    if algorithm == "bag":
        return BaggingModel.from_state(state)
    if algorithm == "logit":
        return LogitModel.from_state(state)
    if algorithm == "nb":
        return NaiveBayesModel.from_state(state)
    if algorithm == "ann":
        return AnnModel.from_state(state)
    raise DataError(f"model file {path} names unknown algorithm {algorithm!r}")


def predict_proba(model, data: Dataset):
    """Probability of the positive class, one value per row."""
    return model.predict_proba(data)
