"""Command-line interface.

One subcommand per pipeline stage (simulate, clean, split, smote, train,
evaluate, mix, predict, km, cox) plus `pipeline`, which runs everything from a
config file.  Stages exchange data through the on-disk serialization formats
(CSV + schema sidecar for datasets, versioned JSON for models), so a pipeline
run can be reproduced stage by stage.

Exit codes: 0 success, 1 usage error, 2 data/domain error (bad files, bad
values), 3 numerical failure (non-convergence, separation, divergence).
"""

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import (ALGORITHMS, ClassifierSpec, algorithm_of, fit,
                          load_model, predict_proba, save_model)
from .cleansing import clean
from .cox import parse_formula
from .dataset import (ColumnSpec, Dataset, SyntheticSpec, generate_synthetic,
                      load_csv, write_csv, write_schema)
from .errors import (DataError, DomainError, NumericError, ParseError,
                     SurvmixError)
from .evaluation import roc_curve, score_histogram
from .fileio import atomic_write_text, read_text, write_json
from .mixture import ABSTENTION_LABELS, MixtureModel, optimize_weight
from .pipeline import (PREDICTED_COLUMN, PipelineConfig, _json_text, _py,
                       _row_ids, cox_suite_formulas, cox_summary_text,
                       evaluate_models, km_by_group, km_csv, km_svg,
                       labels_csv, rank_algorithms, roc_csv, run_cox_suite,
                       run_pipeline)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the contract reserves 2 for
    # data errors, so usage failures are rerouted through an exception.
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _schema_path(data_path, explicit):
    return explicit if explicit else str(Path(data_path).with_suffix(".schema"))


def _load(args) -> Dataset:
    if not Path(args.data).exists():  # name the flag's own path, not the sidecar
        raise DataError(f"input file not found: {args.data}")
    return load_csv(args.data, _schema_path(args.data, args.schema))


def _write_dataset(data: Dataset, path) -> None:
    write_csv(data, path)
    write_schema(data.specs, Path(path).with_suffix(".schema"))


def _parse_pairs(pairs, flag) -> dict:
    out = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise DomainError(f"{flag} expects key=value, got {pair!r}")
        out[key.strip()] = value.strip()
    return out


def _read_references(path) -> dict:
    """Reference levels, one 'column = level' line per entry."""
    refs = {}
    for lineno, raw in enumerate(read_text(path).splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        name, sep, level = line.partition("=")
        if not sep or not name.strip() or not level.strip():
            raise ParseError(f"{path}:{lineno}: expected 'column = level'")
        refs[name.strip()] = level.strip()
    return refs


def _read_labels(path, data: Dataset) -> np.ndarray:
    """Predicted labels aligned to `data` rows, checked by id."""
    rows = list(csv.reader(io.StringIO(read_text(path))))
    if not rows or rows[0] != ["id", "probability", "label"]:
        raise ParseError(f"{path}: expected header id,probability,label")
    ids = [r[0] for r in rows[1:]]
    labels = [r[2] for r in rows[1:]]
    unknown = set(labels) - set(ABSTENTION_LABELS)
    if unknown:
        raise DomainError(f"{path}: unknown labels {sorted(unknown)}")
    if len(labels) != data.n_rows:
        raise DomainError(f"{path}: {len(labels)} label rows "
                          f"for {data.n_rows} data rows")
    if [str(i) for i in _row_ids(data)] != ids:
        raise DomainError(f"{path}: row ids do not match the dataset")
    return np.asarray(labels, dtype=object)


def _survival_columns(data: Dataset):
    duration_col = data.role_column("duration")
    event_col = data.role_column("event")
    if duration_col is None or event_col is None:
        raise DomainError("dataset needs duration and event columns")
    return data.column(duration_col), data.column(event_col).astype(int)


# -- subcommand handlers ---------------------------------------------------------

def _cmd_simulate(args):
    spec = SyntheticSpec(n_rows=args.rows, n_numeric=args.numeric,
                         n_categorical=args.categorical,
                         minority_fraction=args.minority,
                         class_separation=args.separation,
                         hazard_ratio_true=args.hazard_ratio,
                         censoring_horizon=args.horizon, seed=args.seed)
    _write_dataset(generate_synthetic(spec), args.out)


def _cmd_clean(args):
    cleaned, report = clean(_load(args))
    _write_dataset(cleaned, args.out)
    write_json(args.report, _py(report.to_dict()))


def _cmd_split(args):
    from .resampling import SplitSpec, split
    train, test = split(_load(args), SplitSpec(args.train_fraction, args.seed))
    _write_dataset(train, args.train_out)
    _write_dataset(test, args.test_out)


def _cmd_smote(args):
    from .resampling import SmoteSpec, smote
    spec = SmoteSpec(args.smote_k, args.smote_over, args.smote_under, args.seed)
    _write_dataset(smote(_load(args), spec), args.out)


def _cmd_train(args):
    spec = ClassifierSpec(args.algo, seed=args.seed,
                          params=_parse_pairs(args.param, "--param"))
    save_model(fit(_load(args), spec), args.out)


def _cmd_evaluate(args):
    data = _load(args)
    models = {}
    for path in args.model:
        model = load_model(path)
        models[algorithm_of(model)] = model
    metrics = evaluate_models(models, data)
    ranking = rank_algorithms(metrics)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, m in metrics.items():
        suffix = "" if len(models) == 1 else f"_{name}"
        atomic_write_text(out / f"roc{suffix}.csv", roc_csv(m["curve"]))
    histogram = {name: score_histogram(m["scores"], data.label_values())
                 for name, m in metrics.items()}
    public = {a: {k: v for k, v in m.items() if k not in ("curve", "scores")}
              for a, m in metrics.items()}
    write_json(out / "metrics.json", _py({"algorithms": public, "ranking": ranking}))
    write_json(out / "histogram.json", _py(histogram))


def _cmd_mix(args):
    data = _load(args)
    model_a, model_b = load_model(args.model_a), load_model(args.model_b)
    labels = data.label_values()
    scores_a, scores_b = predict_proba(model_a, data), predict_proba(model_b, data)
    alpha, trace = optimize_weight(scores_a, scores_b, labels,
                                   args.alpha_grid_step)
    mixture = MixtureModel(alpha, model_a, model_b,
                           args.cutoff_low, args.cutoff_high)
    result = mixture.classify(data)
    mixed = mixture.predict_proba(data)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "mixture.json", _py({
        "component_a": algorithm_of(model_a), "component_b": algorithm_of(model_b),
        "alpha": alpha, "cutoff_low": args.cutoff_low,
        "cutoff_high": args.cutoff_high, "grid_step": args.alpha_grid_step,
        "objective": max(gp.objective for gp in trace),
        "test_auc": roc_curve(mixed, labels).auc,
        "trace": [gp.to_dict() for gp in trace]}))
    atomic_write_text(out / "labels.csv",
                      labels_csv(_row_ids(data), result.probabilities, result.labels))


def _cmd_predict(args):
    document = json.loads(read_text(args.mixture))
    model_a, model_b = load_model(args.model_a), load_model(args.model_b)
    for key, model in (("component_a", model_a), ("component_b", model_b)):
        if document.get(key) != algorithm_of(model):
            raise DomainError(
                f"{args.mixture}: {key} is {document.get(key)!r} but the "
                f"supplied model is {algorithm_of(model)!r}")
    mixture = MixtureModel(document["alpha"], model_a, model_b,
                           document["cutoff_low"], document["cutoff_high"])
    data = _load(args)
    result = mixture.classify(data)
    atomic_write_text(args.out, labels_csv(_row_ids(data),
                                           result.probabilities, result.labels))


def _group_values(args, data: Dataset) -> np.ndarray:
    if args.labels:
        groups = _read_labels(args.labels, data)
        keep = groups != "unclassified"
    elif args.group_column:
        spec = data.spec(args.group_column)
        if spec.kind == "categorical":
            groups = data.strings(args.group_column)
        else:
            groups = np.asarray([str(v) for v in data.column(args.group_column)],
                                dtype=object)
        keep = ~data.missing_mask(args.group_column)
    else:
        raise DomainError("km needs --labels or --group-column")
    if not keep.any():
        raise DomainError("no rows left to group")
    return groups, keep


def _cmd_km(args):
    data = _load(args)
    groups, keep = _group_values(args, data)
    durations, events = _survival_columns(data)
    durations, events, groups = durations[keep], events[keep], groups[keep]
    curves = km_by_group(durations, events, groups, args.confidence)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "km.csv", km_csv(curves))
    atomic_write_text(out / "km.svg", km_svg(curves))
    if len(curves) == 2 and events.sum() > 0:
        from .survival import logrank_test
        payload = logrank_test(durations, events, groups).to_dict()
    else:
        payload = {"error": "log-rank needs two groups with at least one event"}
    write_json(out / "logrank.json", _py(payload))


def _cmd_cox(args):
    data = _load(args)
    if args.labels:
        labels = _read_labels(args.labels, data)
        keep = labels != "unclassified"
        if not keep.any():
            raise DomainError("every row was unclassified")
        data = data.take_rows(np.flatnonzero(keep)).with_column(
            ColumnSpec(PREDICTED_COLUMN, "numeric", "feature"),
            (labels[keep] == "positive").astype(float))
    formulas = args.formula or (cox_suite_formulas(data) if args.labels else None)
    if not formulas:
        raise DomainError("cox needs --formula (or --labels for the default suite)")
    for formula in formulas:
        parse_formula(formula)  # reject malformed formulas before fitting any
    references = _read_references(args.references) if args.references else {}
    suite = run_cox_suite(data, formulas, args.ties, references)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "cox.json", _py({"ties": args.ties, "models": suite}))
    atomic_write_text(out / "cox_summary.txt", cox_summary_text(suite, args.ties))
    failures = [m for m in suite if m.get("error_kind") == "numeric"]
    if failures:
        raise NumericError("; ".join(
            f"{m['formula']}: {m['error']}" for m in failures))


def _cmd_pipeline(args):
    mapping = {}
    if args.config:
        from .pipeline import parse_config
        mapping = parse_config(read_text(args.config), source=str(args.config))
    mapping.update(_parse_pairs(args.set, "--set"))  # flags win over the file
    if args.out:
        mapping["data.output"] = args.out
    if args.seed is not None:
        mapping["pipeline.seed"] = str(args.seed)
    if args.mix_components:
        mapping["mixture.components"] = args.mix_components
    config = PipelineConfig.from_mapping(mapping)
    report = run_pipeline(config)
    if report.error is not None:
        print(f"error in stage {report.error['stage']}: "
              f"{report.error['message']}", file=sys.stderr)
        return 3 if report.error["kind"] == "numeric" else 2
    return 0


# -- parser ----------------------------------------------------------------------

def _add_data_flags(p, out=True):
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--schema", default=None,
                   help="schema sidecar (default: input path with .schema)")
    if out:
        p.add_argument("--out", required=True, help="output CSV path")


def build_parser() -> _Parser:
    parser = _Parser(prog="survmix", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"survmix {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("simulate", help="generate a seeded synthetic dataset")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--numeric", type=int, default=10)
    p.add_argument("--categorical", type=int, default=2)
    p.add_argument("--minority", type=float, default=0.05)
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--hazard-ratio", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("clean", help="missing-value analysis and row/column drops")
    _add_data_flags(p)
    p.add_argument("--report", default="mva_report.json",
                   help="where to write the cleansing report JSON")
    p.set_defaults(handler=_cmd_clean)

    p = sub.add_parser("split", help="holdout split")
    _add_data_flags(p, out=False)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)
    p.set_defaults(handler=_cmd_split)

    p = sub.add_parser("smote", help="rebalance the training partition")
    _add_data_flags(p)
    p.add_argument("--smote-k", type=int, default=5)
    p.add_argument("--smote-over", type=float, default=200.0)
    p.add_argument("--smote-under", type=float, default=200.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_smote)

    p = sub.add_parser("train", help="fit one classifier")
    _add_data_flags(p, out=False)
    p.add_argument("--algo", required=True, choices=ALGORITHMS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="hyperparameter override (repeatable)")
    p.add_argument("--out", required=True, help="model file path")
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("evaluate", help="ROC/AUC, cutoffs, confusion matrices")
    _add_data_flags(p, out=False)
    p.add_argument("--model", action="append", required=True,
                   help="model file (repeatable)")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("mix", help="optimize the two-component mixture weight")
    _add_data_flags(p, out=False)
    p.add_argument("--model-a", required=True)
    p.add_argument("--model-b", required=True)
    p.add_argument("--alpha-grid-step", type=float, default=0.01)
    p.add_argument("--cutoff-low", type=float, default=0.2)
    p.add_argument("--cutoff-high", type=float, default=0.8)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(handler=_cmd_mix)

    p = sub.add_parser("predict", help="classify with abstention")
    _add_data_flags(p, out=False)
    p.add_argument("--mixture", required=True, help="mixture.json from `mix`")
    p.add_argument("--model-a", required=True)
    p.add_argument("--model-b", required=True)
    p.add_argument("--out", required=True, help="labels.csv path")
    p.set_defaults(handler=_cmd_predict)

    p = sub.add_parser("km", help="Kaplan-Meier curves and log-rank test")
    _add_data_flags(p, out=False)
    p.add_argument("--labels", default=None, help="labels.csv from `predict`")
    p.add_argument("--group-column", default=None,
                   help="group by a dataset column instead of predicted labels")
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(handler=_cmd_km)

    p = sub.add_parser("cox", help="Cox proportional hazards model suite")
    _add_data_flags(p, out=False)
    p.add_argument("--labels", default=None, help="labels.csv from `predict`")
    p.add_argument("--formula", action="append",
                   help='e.g. "group + sector + group:sector" (repeatable)')
    p.add_argument("--ties", choices=("efron", "breslow"), default="efron")
    p.add_argument("--references", default=None,
                   help="reference-levels file, one 'column = level' per line")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(handler=_cmd_cox)

    p = sub.add_parser("pipeline", help="run every stage from a config file")
    p.add_argument("--config", default=None, help="sectioned key=value file")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                   help="config override (repeatable; flags win)")
    p.add_argument("--out", default=None, help="output directory (data.output)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mix-components", default=None, metavar="A,B",
                   help="mixture components, e.g. bag,ann (default: top two by AUC)")
    p.set_defaults(handler=_cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version print and exit(0)
        return 0 if not exc.code else 1
    try:
        status = args.handler(args)
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SurvmixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0 if status is None else status


def entrypoint() -> None:
    sys.exit(main())
