"""End-to-end orchestration: clean, split, rebalance, train all classifiers,
evaluate, blend the best two, predict with abstention on second-era data, then
Kaplan-Meier and a Cox model suite on the predicted groups.

Every stage persists its intermediate in the module serialization format
(datasets as CSV+schema, models as their versioned JSON), so each stage can be
re-run standalone from the previous stage's files and yields the same result
as the one-shot pipeline.  The run report is self-contained: config echo,
seed, per-stage counts, and artifact inventory.
"""

import copy
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import ALGORITHMS, ClassifierSpec, fit, predict_proba, save_model
from .cleansing import clean
from .cox import (build_design, cox_fit, cox_tests, detect_separation,
                  hazard_ratios, parse_formula)
from .dataset import (ColumnSpec, Dataset, SyntheticSpec, format_cell,
                      generate_synthetic, load_csv, write_csv, write_schema)
from .errors import DomainError, NumericError, ParseError, SurvmixError
from .evaluation import (CUTOFF_CRITERIA, confusion, roc_curve, select_cutoff,
                         separation_score)
from .fileio import read_text, write_json
from .mixture import MixtureModel, optimize_weight
from .resampling import SmoteSpec, SplitSpec, smote, split
from .survival import greenwood_variance, km_confidence, km_fit, logrank_test
from .svg import render_svg

SCHEMA_VERSION = 1

PREDICTED_COLUMN = "predicted_label"


# -- configuration -------------------------------------------------------------

def parse_config(text: str, source: str = "<config>") -> dict:
    """Flat sectioned key=value format -> {'section.key': 'value'} strings."""
    out = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if not section:
                raise ParseError(f"{source}:{lineno}: empty section name")
            continue
        if "=" not in line:
            raise ParseError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        if section is None:
            raise ParseError(f"{source}:{lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ParseError(f"{source}:{lineno}: empty key")
        out[f"{section}.{key}"] = value.strip()
    return out


def _csv_list(value: str) -> tuple:
    items = tuple(part.strip() for part in value.split(",") if part.strip())
    return items


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved pipeline parameters; see `from_mapping` for the config keys."""

    output_dir: str = ""
    train_path: str = ""
    train_schema: str = ""
    predict_path: str = ""
    predict_schema: str = ""
    synthetic_rows: int = 0          # > 0 switches both eras to synthetic data
    synthetic_numeric: int = 10
    synthetic_categorical: int = 2
    synthetic_minority: float = 0.05
    synthetic_separation: float = 1.0
    synthetic_hazard_ratio: float = 1.0
    synthetic_horizon: float = 10.0
    synthetic_predict_rows: int = 0  # 0 -> same as synthetic_rows
    seed: int = 0
    train_fraction: float = 0.8
    smote_k: int = 5
    smote_over: float = 200.0
    smote_under: float = 200.0
    algorithms: tuple = ALGORITHMS
    mix_components: tuple = ()       # empty -> top two by test AUC
    alpha_grid_step: float = 0.01
    cutoff_low: float = 0.2
    cutoff_high: float = 0.8
    km_confidence: float = 0.95
    cox_formulas: tuple = ()         # empty -> auto suite from categoricals
    cox_ties: str = "efron"
    cox_references: dict = field(default_factory=dict)

    _KEYS = {
        "data.train": ("train_path", str),
        "data.train_schema": ("train_schema", str),
        "data.predict": ("predict_path", str),
        "data.predict_schema": ("predict_schema", str),
        "data.output": ("output_dir", str),
        "synthetic.rows": ("synthetic_rows", int),
        "synthetic.numeric": ("synthetic_numeric", int),
        "synthetic.categorical": ("synthetic_categorical", int),
        "synthetic.minority": ("synthetic_minority", float),
        "synthetic.separation": ("synthetic_separation", float),
        "synthetic.hazard_ratio": ("synthetic_hazard_ratio", float),
        "synthetic.horizon": ("synthetic_horizon", float),
        "synthetic.predict_rows": ("synthetic_predict_rows", int),
        "pipeline.seed": ("seed", int),
        "split.train_fraction": ("train_fraction", float),
        "smote.k": ("smote_k", int),
        "smote.over": ("smote_over", float),
        "smote.under": ("smote_under", float),
        "train.algorithms": ("algorithms", "list"),
        "mixture.components": ("mix_components", "list"),
        "mixture.alpha_grid_step": ("alpha_grid_step", float),
        "mixture.cutoff_low": ("cutoff_low", float),
        "mixture.cutoff_high": ("cutoff_high", float),
        "km.confidence": ("km_confidence", float),
        "cox.formulas": ("cox_formulas", "formulas"),
        "cox.ties": ("cox_ties", str),
        "cox.references": ("cox_references", "refs"),
    }

    def __post_init__(self):
        if not self.output_dir:
            raise DomainError("config needs data.output (the output directory)")
        if self.synthetic_rows <= 0 and not self.train_path:
            raise DomainError("config needs data.train or synthetic.rows")
        if self.synthetic_rows <= 0 and not self.predict_path:
            raise DomainError("config needs data.predict or synthetic.rows")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise DomainError(f"unknown algorithms in config: {sorted(unknown)}")
        if len(self.algorithms) < 2:
            raise DomainError("the pipeline needs at least two algorithms to mix")
        if self.mix_components:
            if len(self.mix_components) != 2:
                raise DomainError("mixture.components must name exactly two algorithms")
            missing = set(self.mix_components) - set(self.algorithms)
            if missing:
                raise DomainError(
                    f"mixture components not in train.algorithms: {sorted(missing)}")
        if self.cox_ties not in ("efron", "breslow"):
            raise DomainError(f"unknown cox ties method {self.cox_ties!r}")

    @classmethod
    def from_mapping(cls, mapping) -> "PipelineConfig":
        values = {}
        for key, raw in mapping.items():
            if key not in cls._KEYS:
                raise DomainError(f"unknown config key {key!r}")
            name, kind = cls._KEYS[key]
            try:
                if kind == "list":
                    values[name] = _csv_list(raw)
                elif kind == "formulas":
                    values[name] = tuple(f.strip() for f in raw.split(",") if f.strip())
                elif kind == "refs":
                    refs = {}
                    for pair in _csv_list(raw):
                        col, _, level = pair.partition("=")
                        if not col.strip() or not level.strip():
                            raise ValueError(pair)
                        refs[col.strip()] = level.strip()
                    values[name] = refs
                else:
                    values[name] = kind(raw)
            except ValueError:
                raise DomainError(f"config key {key!r}: cannot parse {raw!r}")
        return cls(**values)

    @classmethod
    def from_file(cls, path, overrides=None) -> "PipelineConfig":
        mapping = parse_config(read_text(path), source=str(path))
        mapping.update(overrides or {})
        return cls.from_mapping(mapping)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out


# -- report --------------------------------------------------------------------

@dataclass
class RunReport:
    seed: int
    config: dict
    stages: list = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)   # relative path -> text
    error: "dict | None" = None
    tool_version: str = __version__
    schema_version: int = SCHEMA_VERSION

    def add_stage(self, name: str, seconds: float, detail: dict) -> None:
        self.stages.append({"name": name, "seconds": round(seconds, 6), **detail})

    def to_dict(self) -> dict:
        return copy.deepcopy({
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "config": self.config,
            "stages": self.stages,
            "artifacts": sorted(self.artifacts),
            "error": self.error,
        })


def validate_report(obj) -> None:
    """Raise DomainError unless `obj` looks like a RunReport.to_dict payload."""
    if not isinstance(obj, dict):
        raise DomainError("report must be a JSON object")
    required = {"schema_version": int, "tool_version": str, "seed": int,
                "config": dict, "stages": list, "artifacts": list}
    for key, kind in required.items():
        if key not in obj:
            raise DomainError(f"report is missing key {key!r}")
        if not isinstance(obj[key], kind):
            raise DomainError(f"report key {key!r} must be {kind.__name__}")
    if obj["schema_version"] != SCHEMA_VERSION:
        raise DomainError(f"unsupported report schema_version {obj['schema_version']}")
    if "error" not in obj:
        raise DomainError("report is missing key 'error'")
    if obj["error"] is not None and not isinstance(obj["error"], dict):
        raise DomainError("report key 'error' must be null or an object")
    seen = set()
    for stage in obj["stages"]:
        if not isinstance(stage, dict) or "name" not in stage or "seconds" not in stage:
            raise DomainError("each stage needs 'name' and 'seconds'")
        if stage["name"] in seen:
            raise DomainError(f"stage {stage['name']!r} appears more than once")
        seen.add(stage["name"])


def _py(obj):
    """Recursively convert numpy scalars/arrays for JSON serialization."""
    if isinstance(obj, dict):
        return {str(k): _py(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_py(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_py(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def emit_report(report: RunReport, out_dir) -> list:
    """Write report.json and every collected artifact; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(report.artifacts):
        path = out / name
        from .fileio import atomic_write_text
        atomic_write_text(path, report.artifacts[name])
        written.append(str(path))
    report_path = out / "report.json"
    write_json(report_path, _py(report.to_dict()))
    written.append(str(report_path))
    return written


# -- csv helpers for analysis artifacts -----------------------------------------

def _csv_text(header, rows) -> str:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return "" if math.isnan(v) else repr(float(v))
        return str(v)

    lines = [",".join(header)]
    lines += [",".join(cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def roc_csv(curve) -> str:
    rows = zip(curve.thresholds.tolist(), curve.fpr.tolist(), curve.tpr.tolist())
    return _csv_text(("threshold", "fpr", "tpr"), rows)


def labels_csv(ids, probabilities, labels) -> str:
    return _csv_text(("id", "probability", "label"),
                     zip(ids, probabilities.tolist(), labels))


def km_csv(curves: dict) -> str:
    """One row per distinct event time per group; undefined cells left empty."""
    rows = []
    for group in sorted(curves):
        c = curves[group]
        for i in range(len(c.times)):
            sd = math.sqrt(c.variance[i]) if c.variance_defined[i] else None
            lo = c.ci_lower[i] if c.ci_defined[i] else None
            hi = c.ci_upper[i] if c.ci_defined[i] else None
            rows.append((group, float(c.times[i]), int(c.at_risk[i]),
                         int(c.deaths[i]), float(c.survival[i]), sd, lo, hi))
    return _csv_text(("group", "time", "at_risk", "deaths", "survival",
                      "sd", "ci_lo", "ci_hi"), rows)


# -- stage implementations -------------------------------------------------------

def evaluate_models(models: dict, data: Dataset) -> dict:
    """Per-algorithm AUC, separation, optimal cutoffs, and ROC curves."""
    labels = data.label_values()
    out = {}
    for name, model in models.items():
        scores = predict_proba(model, data)
        curve = roc_curve(scores, labels)
        cutoffs, matrices = {}, {}
        for criterion in CUTOFF_CRITERIA:
            best = select_cutoff(curve, criterion)
            cutoffs[criterion] = {"cutoff": best.cutoff, "tpr": best.tpr,
                                  "fpr": best.fpr, "value": best.value}
            matrices[criterion] = confusion(scores, labels, best.cutoff).to_dict()
        out[name] = {"auc": curve.auc,
                     "separation": separation_score(scores, labels),
                     "cutoffs": cutoffs, "confusion": matrices,
                     "curve": curve, "scores": scores}
    return out


def rank_algorithms(metrics: dict) -> list:
    """Algorithm names by descending test AUC; vocabulary order breaks ties."""
    return sorted(metrics, key=lambda a: (-metrics[a]["auc"], ALGORITHMS.index(a)))


def cox_suite_formulas(data: Dataset) -> list:
    """Paper-shaped model suite: main effect, then + and * per categorical."""
    cats = [s.name for s in data.specs
            if s.kind == "categorical" and s.role == "feature"]
    suite = [PREDICTED_COLUMN]
    suite += [f"{PREDICTED_COLUMN} + {c}" for c in cats]
    suite += [f"{PREDICTED_COLUMN} * {c}" for c in cats]
    return suite


def run_cox_suite(data: Dataset, formulas, ties: str, references: dict) -> list:
    """Fit each model independently; an error in one model never blocks the rest."""
    duration_col = data.role_column("duration")
    event_col = data.role_column("event")
    if duration_col is None or event_col is None:
        raise DomainError("cox stage needs duration and event columns")
    models = []
    for formula in formulas:
        entry = {"formula": formula}
        try:
            terms = parse_formula(formula)
            refs = {k: v for k, v in references.items()
                    if any(k in t.split(":") for t in terms)}
            design = build_design(data, terms, references=refs)
            durations = data.column(duration_col)[design.row_index]
            events = data.column(event_col)[design.row_index].astype(int)
            flags = detect_separation(design, durations, events)
            fit_ = cox_fit(design, durations, events, ties=ties)
            tests = cox_tests(fit_, design, durations, events)
            ratios = hazard_ratios(fit_)
            entry.update({
                "n": int(design.n_rows),
                "events": int(events.sum()),
                "coefficients": [
                    {"name": n, "beta": float(b), "se": float(s),
                     "hazard_ratio": r.ratio, "ci_lower": r.ci_lower,
                     "ci_upper": r.ci_upper}
                    for n, b, s, r in zip(fit_.names, fit_.beta, fit_.se, ratios)],
                "tests": tests.to_dict(),
                "iterations": fit_.iterations,
                "converged": fit_.converged,
                "reference_levels": dict(design.reference_levels),
                "dropped_columns": [list(d) for d in design.dropped_columns],
                "separation_flags": [{"column": f.column, "reason": f.reason}
                                     for f in flags],
            })
        except SurvmixError as exc:
            entry["error"] = str(exc)
            entry["error_kind"] = ("numeric" if isinstance(exc, NumericError)
                                   else "data")
        models.append(entry)
    return models


def cox_summary_text(suite: list, ties: str) -> str:
    """Fixed-width per-model summary table."""
    lines = [f"Cox proportional hazards (ties: {ties})", ""]
    for i, model in enumerate(suite, start=1):
        lines.append(f"Model ({i}): {model['formula']}")
        if "error" in model:
            lines.append(f"  not estimated: {model['error']}")
            lines.append("")
            continue
        lines.append(f"  n = {model['n']}, events = {model['events']}, "
                     f"iterations = {model['iterations']}")
        lines.append(f"  {'column':<28} {'beta':>10} {'se':>10} "
                     f"{'HR':>8} {'95% CI':>20}")
        for c in model["coefficients"]:
            ci = f"[{c['ci_lower']:.4f}, {c['ci_upper']:.4f}]"
            lines.append(f"  {c['name']:<28} {c['beta']:>10.4f} {c['se']:>10.4f} "
                         f"{c['hazard_ratio']:>8.4f} {ci:>20}")
        t = model["tests"]
        parts = [f"Wald {t['wald']['statistic']:.3f} "
                 f"(df {t['wald']['df']}, p {t['wald']['p_value']:.3g})",
                 f"LR {t['lr']['statistic']:.3f} "
                 f"(df {t['lr']['df']}, p {t['lr']['p_value']:.3g})"]
        if t["score"] is None:
            parts.append("Score unavailable (singular information)")
        else:
            parts.append(f"Score {t['score']['statistic']:.3f} "
                         f"(df {t['score']['df']}, p {t['score']['p_value']:.3g})")
        lines.append("  " + " | ".join(parts))
        if model["separation_flags"]:
            for f in model["separation_flags"]:
                lines.append(f"  flagged: {f['column']} ({f['reason']})")
        lines.append("")
    return "\n".join(lines) + "\n"


def km_by_group(durations, events, groups, confidence: float) -> dict:
    """Fitted+banded KM curve per distinct group value."""
    curves = {}
    for value in np.unique(groups):
        mask = groups == value
        curve = km_fit(durations[mask], events[mask])
        curves[str(value)] = km_confidence(greenwood_variance(curve), confidence)
    return curves


def km_svg(curves: dict) -> str:
    series = []
    for group in sorted(curves):
        c = curves[group]
        x = np.concatenate([[0.0], c.times])
        y = np.concatenate([[1.0], c.survival])
        series.append((group, x, y))
    return render_svg(series, "step", title="Survival by predicted group",
                      x_label="time", y_label="survival")


# -- the pipeline ----------------------------------------------------------------

def _load_train_era(config: PipelineConfig) -> Dataset:
    if config.synthetic_rows > 0:
        return generate_synthetic(_synthetic_spec(config, era="train"))
    schema = config.train_schema or str(Path(config.train_path).with_suffix(".schema"))
    return load_csv(config.train_path, schema)


def _load_predict_era(config: PipelineConfig) -> Dataset:
    if config.synthetic_rows > 0:
        return generate_synthetic(_synthetic_spec(config, era="predict"))
    schema = config.predict_schema or str(
        Path(config.predict_path).with_suffix(".schema"))
    return load_csv(config.predict_path, schema)


def _synthetic_spec(config: PipelineConfig, era: str) -> SyntheticSpec:
    rows = config.synthetic_rows
    seed = config.seed
    if era == "predict":
        rows = config.synthetic_predict_rows or config.synthetic_rows
        seed = config.seed + 1   # a distinct draw plays the second era
    return SyntheticSpec(
        n_rows=rows, n_numeric=config.synthetic_numeric,
        n_categorical=config.synthetic_categorical,
        minority_fraction=config.synthetic_minority,
        class_separation=config.synthetic_separation,
        hazard_ratio_true=config.synthetic_hazard_ratio,
        censoring_horizon=config.synthetic_horizon, seed=seed)


def _write_dataset(data: Dataset, out_dir: Path, stem: str) -> None:
    write_csv(data, out_dir / f"{stem}.csv")
    write_schema(data.specs, out_dir / f"{stem}.schema")


def _class_balance(data: Dataset) -> dict:
    y = data.label_values()
    return {"negative": int((y == 0).sum()), "positive": int((y == 1).sum())}


def _train_one(train: Dataset, algorithm: str, seed: int) -> tuple:
    t0 = time.perf_counter()
    model = fit(train, ClassifierSpec(algorithm, seed=seed))
    return model, round(time.perf_counter() - t0, 6)


def _row_ids(data: Dataset) -> list:
    """Values of the id column, or row numbers when there is none."""
    name = data.role_column("id")
    if name is None:
        return list(range(data.n_rows))
    if data.spec(name).kind == "categorical":
        return [v if v is not None else f"row{i}"
                for i, v in enumerate(data.strings(name))]
    values = data.column(name)
    return [format_cell(data.spec(name), v) for v in values]


def run_pipeline(config: PipelineConfig) -> RunReport:
    """Execute every stage; emit artifacts and report.json into the output dir.

    Any stage failure stops the run, records {stage, message, kind} in the
    report's error field, and still emits the partial report.
    """
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = RunReport(seed=config.seed, config=config.to_dict())
    stage_name = "load"
    try:
        clock = time.perf_counter
        t0 = clock()
        raw = _load_train_era(config)
        predict_era = _load_predict_era(config)
        report.add_stage("load", clock() - t0, {
            "train_rows": raw.n_rows, "predict_rows": predict_era.n_rows})

        stage_name = "clean"
        t0 = clock()
        cleaned, cleaning = clean(raw)
        _write_dataset(cleaned, out_dir, "cleaned")
        report.artifacts["mva_report.json"] = _json_text(cleaning.to_dict())
        report.add_stage("clean", clock() - t0, {
            "rows_in": raw.n_rows, "rows_out": cleaned.n_rows,
            "stages": cleaning.to_dict()["stages"]})

        stage_name = "split"
        t0 = clock()
        train, test = split(cleaned, SplitSpec(config.train_fraction, config.seed))
        _write_dataset(train, out_dir, "train")
        _write_dataset(test, out_dir, "test")
        report.add_stage("split", clock() - t0, {
            "train_rows": train.n_rows, "test_rows": test.n_rows,
            "train_balance": _class_balance(train),
            "test_balance": _class_balance(test)})

        stage_name = "smote"
        t0 = clock()
        balanced = smote(train, SmoteSpec(config.smote_k, config.smote_over,
                                          config.smote_under, config.seed))
        _write_dataset(balanced, out_dir, "train_balanced")
        report.add_stage("smote", clock() - t0, {
            "rows_in": train.n_rows, "rows_out": balanced.n_rows,
            "balance_before": _class_balance(train),
            "balance_after": _class_balance(balanced)})

        stage_name = "train"
        t0 = clock()
        # Fits are independent and draw only from private seeded substreams,
        # so concurrent training is deterministic.
        with ThreadPoolExecutor(max_workers=len(config.algorithms)) as pool:
            futures = {algo: pool.submit(_train_one, balanced, algo, config.seed)
                       for algo in config.algorithms}
            results = {algo: futures[algo].result() for algo in config.algorithms}
        models = {algo: model for algo, (model, _) in results.items()}
        timing = {algo: seconds for algo, (_, seconds) in results.items()}
        for algo in config.algorithms:
            save_model(models[algo], out_dir / f"model_{algo}.json")
        report.add_stage("train", clock() - t0, {
            "algorithms": list(config.algorithms), "seconds_per_model": timing})

        stage_name = "evaluate"
        t0 = clock()
        metrics = evaluate_models(models, test)
        ranking = rank_algorithms(metrics)
        for algo in config.algorithms:
            report.artifacts[f"roc_{algo}.csv"] = roc_csv(metrics[algo]["curve"])
        public = {a: {k: v for k, v in m.items() if k not in ("curve", "scores")}
                  for a, m in metrics.items()}
        report.artifacts["metrics.json"] = _json_text(
            {"algorithms": public, "ranking": ranking})
        report.add_stage("evaluate", clock() - t0, {
            "ranking": ranking,
            "auc": {a: metrics[a]["auc"] for a in ranking},
            "cutoffs": {a: public[a]["cutoffs"] for a in ranking}})

        stage_name = "mix"
        t0 = clock()
        pair = tuple(config.mix_components) or tuple(ranking[:2])
        labels = test.label_values()
        alpha, trace = optimize_weight(metrics[pair[0]]["scores"],
                                       metrics[pair[1]]["scores"],
                                       labels, config.alpha_grid_step)
        mixture = MixtureModel(alpha, models[pair[0]], models[pair[1]],
                               config.cutoff_low, config.cutoff_high)
        mixed_test = mixture.predict_proba(test)
        mix_auc = roc_curve(mixed_test, labels).auc
        best = max(gp.objective for gp in trace)
        report.artifacts["mixture.json"] = _json_text({
            "component_a": pair[0], "component_b": pair[1], "alpha": alpha,
            "cutoff_low": config.cutoff_low, "cutoff_high": config.cutoff_high,
            "grid_step": config.alpha_grid_step, "objective": best,
            "test_auc": mix_auc, "trace": [gp.to_dict() for gp in trace]})
        report.add_stage("mix", clock() - t0, {
            "components": list(pair), "alpha": alpha, "objective": best,
            "test_auc": mix_auc})

        stage_name = "predict"
        t0 = clock()
        result = mixture.classify(predict_era)
        report.artifacts["labels.csv"] = labels_csv(
            _row_ids(predict_era), result.probabilities, result.labels)
        report.add_stage("predict", clock() - t0, {
            "rows": predict_era.n_rows, "counts": dict(result.counts),
            "fractions": dict(result.fractions)})

        stage_name = "km"
        t0 = clock()
        duration_col = predict_era.role_column("duration")
        event_col = predict_era.role_column("event")
        if duration_col is None or event_col is None:
            raise DomainError("km stage needs duration and event columns "
                              "in the prediction-era data")
        labels_arr = np.asarray(result.labels)
        classified = labels_arr != "unclassified"
        if not classified.any():
            raise DomainError("km stage: every row was unclassified")
        durations = predict_era.column(duration_col)[classified]
        events = predict_era.column(event_col)[classified].astype(int)
        groups = labels_arr[classified]
        curves = km_by_group(durations, events, groups, config.km_confidence)
        report.artifacts["km.csv"] = km_csv(curves)
        report.artifacts["km.svg"] = km_svg(curves)
        km_detail = {g: {"n": int((groups == g).sum()),
                         "events": int(events[groups == g].sum()),
                         "final_survival": (float(c.survival[-1])
                                            if len(c.times) else 1.0)}
                     for g, c in curves.items()}
        if len(curves) == 2 and events.sum() > 0:
            lr = logrank_test(durations, events, groups)
            logrank_payload = lr.to_dict()
        else:
            logrank_payload = {"error": "log-rank needs two predicted groups "
                                        "with at least one event"}
        report.artifacts["logrank.json"] = _json_text(logrank_payload)
        report.add_stage("km", clock() - t0, {
            "groups": km_detail, "logrank": logrank_payload,
            "confidence": config.km_confidence})

        stage_name = "cox"
        t0 = clock()
        kept = predict_era.take_rows(np.flatnonzero(classified))
        with_pred = kept.with_column(
            ColumnSpec(PREDICTED_COLUMN, "numeric", "feature"),
            (groups == "positive").astype(float))
        formulas = list(config.cox_formulas) or cox_suite_formulas(predict_era)
        suite = run_cox_suite(with_pred, formulas, config.cox_ties,
                              config.cox_references)
        report.artifacts["cox.json"] = _json_text(
            {"ties": config.cox_ties, "models": suite})
        report.artifacts["cox_summary.txt"] = cox_summary_text(suite, config.cox_ties)
        report.add_stage("cox", clock() - t0, {
            "models": [{k: m.get(k) for k in ("formula", "n", "converged", "error")
                        if k in m} for m in suite]})
    except SurvmixError as exc:
        report.error = {"stage": stage_name, "message": str(exc),
                        "kind": "numeric" if isinstance(exc, NumericError) else "data"}
    emit_report(report, out_dir)
    return report


def _json_text(obj) -> str:
    import json
    return json.dumps(_py(obj), indent=2, sort_keys=True) + "\n"
