"""Metrics, synthetic data generation, the experiment runner, and reports.

The synthetic generator stands in for a scraped product dataset: category-
dependent price/weight/shipment distributions, bounded ratings, heavy-tailed
review counts, messy colour strings, per-column missingness, and a planted
monotone sales signal wide enough to populate every sales-range bin.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .baseline_models import (
    GbdtBaselineConfig,
    SvrConfig,
    fit_bayes_ridge,
    fit_gbdt_first_order,
    fit_linear_svr,
    fit_ols,
)
from .boosted_trees import TrainConfig, train
from .data_model import DataTable, default_schema, load_csv, load_schema, split_train_test
from .errors import EmptyData, InvalidConfig, InvalidSpec, LengthMismatch
from .feature_pipeline import ColorLexicon, ImputationPlan, fit_pipeline, transform
from .range_binning import BinSpec, apply_binning, bins_from_json, default_bins

RAW_SALES = "raw_sales"
BINNED_RANGE = "binned_range"


def _as_pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.ndim != 1 or t.ndim != 1 or p.shape != t.shape:
        raise LengthMismatch(f"prediction/truth shapes differ: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise EmptyData("metrics need at least one element")
    return p, t


def mse(pred, truth) -> float:
    p, t = _as_pair(pred, truth)
    return float(np.mean((p - t) ** 2))


def rmse(pred, truth) -> float:
    return math.sqrt(mse(pred, truth))


def mae(pred, truth) -> float:
    p, t = _as_pair(pred, truth)
    return float(np.mean(np.abs(p - t)))


@dataclass(frozen=True)
class MetricsRow:
    """One comparison line: a model name and its three test-set errors.
    A failed fit carries the error text instead of numbers."""

    model_name: str
    mse: float | None = None
    rmse: float | None = None
    mae: float | None = None
    error: str | None = None


# ---------------------------------------------------------------------------
# Synthetic dataset generation
# ---------------------------------------------------------------------------

DEFAULT_CATEGORIES = (
    "wireless headphones",
    "gaming keyboards",
    "computer mice",
    "air fryers",
)

# price log-mean, weight in pounds, typical shipment days
_CATEGORY_PROFILES = {
    "wireless headphones": (4.4, 0.55, 3.0),
    "gaming keyboards": (4.1, 2.1, 4.0),
    "computer mice": (3.5, 0.22, 2.0),
    "air fryers": (4.5, 11.5, 6.0),
}
_FALLBACK_PROFILE = (4.0, 1.0, 4.0)

_COLOR_POOL = (
    "black",
    "white",
    "grey",
    "dark grey",
    "light blue",
    "matte black",
    "red",
    "blue",
    "pink",
    "silver",
    "black/red",
    "white/gold",
    "blue/grey",
    "red, white & blue",
    "black and silver and grey",
    "slate",
)
_COLOR_WEIGHTS = (
    0.22, 0.12, 0.08, 0.08, 0.05, 0.06, 0.06, 0.06, 0.04, 0.05,
    0.05, 0.03, 0.03, 0.02, 0.02, 0.03,
)


def default_missing_rates() -> dict:
    return {
        "Products": 0.02,
        "Brand": 0.06,
        "Colour": 0.05,
        "Manufacturer": 0.06,
        "Price": 0.04,
        "Rating": 0.07,
        "Number of Rating": 0.07,
        "Shipment": 0.08,
        "Weight Pounds": 0.08,
        "Sales": 0.03,
    }


@dataclass(frozen=True)
class SyntheticSpec:
    n_products: int = 1565
    categories: tuple[str, ...] = DEFAULT_CATEGORIES
    brand_count: int = 12
    missing_rates: dict = field(default_factory=default_missing_rates)
    noise_scale: float = 0.65
    seed: int = 7

    def __post_init__(self):
        if self.n_products < 10:
            raise InvalidSpec(f"n_products must be >= 10, got {self.n_products}")
        if not self.categories:
            raise InvalidSpec("at least one category is required")
        if self.brand_count < 1:
            raise InvalidSpec(f"brand_count must be >= 1, got {self.brand_count}")
        if self.noise_scale < 0:
            raise InvalidSpec(f"noise_scale must be >= 0, got {self.noise_scale}")
        for name, rate in self.missing_rates.items():
            if not 0.0 <= rate <= 1.0:
                raise InvalidSpec(f"missing rate for {name!r} must be in [0, 1], got {rate}")


def generate_synthetic(spec: SyntheticSpec | None = None) -> DataTable:
    """Deterministically emit a product table under the default schema."""
    spec = spec or SyntheticSpec()
    rng = np.random.default_rng(spec.seed)
    n = spec.n_products
    schema = default_schema()

    categories = [spec.categories[i] for i in rng.integers(0, len(spec.categories), n)]
    profiles = [_CATEGORY_PROFILES.get(c, _FALLBACK_PROFILE) for c in categories]

    brand_names = [f"brand{i:02d}" for i in range(spec.brand_count)]
    # most manufacturers trade under the brand's own name
    manufacturer_of = {
        b: (b if i % 10 < 7 else f"{b} industries") for i, b in enumerate(brand_names)
    }
    brands = [brand_names[i] for i in rng.integers(0, spec.brand_count, n)]
    manufacturers = [manufacturer_of[b] for b in brands]

    price = np.round(np.exp(rng.normal([p[0] for p in profiles], 0.45)), 2)
    rating = np.round(np.clip(rng.normal(4.2, 0.55, n), 0.0, 5.0), 1)
    review_counts = np.floor(np.exp(rng.normal(5.0, 1.6, n)))
    shipment = np.clip(np.round(rng.normal([p[2] for p in profiles], 1.8)), 1, 30)
    weight = np.round(np.exp(rng.normal(np.log([p[1] for p in profiles]), 0.3)), 2)
    colours = [
        _COLOR_POOL[i] for i in rng.choice(len(_COLOR_POOL), size=n, p=_COLOR_WEIGHTS)
    ]

    # percentile of price within its own category, in [0, 1]
    price_rank = np.zeros(n)
    categories_arr = np.asarray(categories)
    for cat in spec.categories:
        members = np.flatnonzero(categories_arr == cat)
        if members.size <= 1:
            price_rank[members] = 0.5
            continue
        order = np.argsort(price[members], kind="stable")
        ranks = np.empty(members.size)
        ranks[order] = np.arange(members.size)
        price_rank[members] = ranks / (members.size - 1)

    # planted signal: rises with rating and review volume, falls with price
    # rank; the exponent spreads sales across every volume range
    score = (
        0.40 * (rating / 5.0)
        + 0.40 * np.minimum(1.0, np.log1p(review_counts) / math.log1p(30000.0))
        + 0.20 * (1.0 - price_rank)
    )
    noise = spec.noise_scale * rng.standard_normal(n)
    sales = np.round(np.maximum(0.0, np.expm1(score * 9.9 + noise)))

    columns: dict[str, list] = {
        "Products": categories,
        "Brand": brands,
        "Colour": colours,
        "Manufacturer": manufacturers,
        "Price": [float(v) for v in price],
        "Rating": [float(v) for v in rating],
        "Number of Rating": [float(v) for v in review_counts],
        "Shipment": [float(v) for v in shipment],
        "Weight Pounds": [float(v) for v in weight],
        "Sales": [float(v) for v in sales],
    }
    for col in schema:
        rate = spec.missing_rates.get(col.name, 0.0)
        if rate <= 0.0:
            continue
        mask = rng.random(n) < rate
        values = columns[col.name]
        columns[col.name] = [None if mask[i] else values[i] for i in range(n)]

    rows = tuple(
        tuple(columns[col.name][i] for col in schema) for i in range(n)
    )
    return DataTable(schema, rows)


# ---------------------------------------------------------------------------
# Experiment runner
# ---------------------------------------------------------------------------

MODEL_KINDS = ("boosted_trees", "gbdt", "ols", "bayes_ridge", "linear_svr")


@dataclass(frozen=True)
class ModelSpec:
    name: str
    kind: str
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidConfig(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")


def default_models() -> tuple[ModelSpec, ...]:
    """The five-model comparison lineup in its reporting order."""
    return (
        ModelSpec("GBDT", "gbdt"),
        ModelSpec("XGBoost", "boosted_trees"),
        ModelSpec("Linear", "ols"),
        ModelSpec("Bayes", "bayes_ridge"),
        ModelSpec("SVM", "linear_svr"),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    data_csv: str | None = None
    schema_path: str | None = None
    synthetic: SyntheticSpec | None = None
    target_mode: str = BINNED_RANGE
    bins: BinSpec | None = None
    train_fraction: float = 0.8
    seed: int = 7
    models: tuple[ModelSpec, ...] = field(default_factory=default_models)
    plan: ImputationPlan | None = None
    lexicon: ColorLexicon | None = None
    round_predictions: bool = False
    output: str | None = None

    def __post_init__(self):
        if (self.data_csv is None) == (self.synthetic is None):
            raise InvalidConfig("configure exactly one of data_csv or synthetic")
        if self.target_mode not in (RAW_SALES, BINNED_RANGE):
            raise InvalidConfig(f"unknown target mode {self.target_mode!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidConfig(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if not self.models:
            raise InvalidConfig("the model roster must not be empty")


def _fit_and_predict(model: ModelSpec, x_train, y_train, x_test, layout, n_jobs):
    if model.kind == "boosted_trees":
        config = TrainConfig(**model.config)
        fitted = train(x_train, y_train, config, feature_names=layout, n_jobs=n_jobs)
        return fitted.predict(x_test)
    if model.kind == "gbdt":
        fitted = fit_gbdt_first_order(x_train, y_train, GbdtBaselineConfig(**model.config))
        return fitted.predict(x_test)
    if model.kind == "ols":
        return fit_ols(x_train, y_train).predict(x_test)
    if model.kind == "bayes_ridge":
        alpha = model.config.get("alpha", 1.0)
        return fit_bayes_ridge(x_train, y_train, alpha=alpha).predict(x_test)
    if model.kind == "linear_svr":
        return fit_linear_svr(x_train, y_train, SvrConfig(**model.config)).predict(x_test)
    raise InvalidConfig(f"unknown model kind {model.kind!r}")


def run_experiment(config: ExperimentConfig, n_jobs: int = 1) -> list[MetricsRow]:
    """Load or generate data, split, fit the pipeline on the train side,
    fit every roster model, and score the held-out side.

    One model failing is recorded in its row; the rest of the roster still
    runs.  Report row order follows the roster order.
    """
    if config.synthetic is not None:
        table = generate_synthetic(config.synthetic)
    else:
        schema = load_schema(config.schema_path) if config.schema_path else default_schema()
        table = load_csv(config.data_csv, schema)

    split = split_train_test(table, config.train_fraction, config.seed)
    train_table = table.subset(split.train_rows)
    test_table = table.subset(split.test_rows)

    state = fit_pipeline(train_table, config.plan, config.lexicon)
    x_train, y_train = transform(train_table, state)
    x_test, y_test = transform(test_table, state)

    bins = config.bins or default_bins()
    if config.target_mode == BINNED_RANGE:
        y_train = np.asarray(apply_binning(y_train, bins), dtype=np.float64)
        y_test = np.asarray(apply_binning(y_test, bins), dtype=np.float64)

    rows: list[MetricsRow] = []
    for model in config.models:
        try:
            preds = _fit_and_predict(model, x_train, y_train, x_test, state.layout, n_jobs)
            if config.round_predictions and config.target_mode == BINNED_RANGE:
                preds = np.clip(np.rint(preds), 0, bins.n_bins - 1)
            rows.append(
                MetricsRow(
                    model_name=model.name,
                    mse=mse(preds, y_test),
                    rmse=rmse(preds, y_test),
                    mae=mae(preds, y_test),
                )
            )
        except Exception as exc:  # a failed model must not sink the comparison
            rows.append(MetricsRow(model_name=model.name, error=str(exc)))
    return rows


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------

REPORT_FORMATS = ("table", "csv", "json")


def _format_metric(value: float | None) -> str:
    if value is None or not math.isfinite(value):
        return "failed"
    if abs(value) >= 1e6:
        return f"{value:.2E}"
    return f"{value:.2f}"


def render_report(rows: Sequence[MetricsRow], fmt: str = "table") -> str:
    """Render rows as an aligned text table, CSV, or JSON.

    The text table uses two fraction digits and switches to scientific
    notation at 1e6; CSV and JSON keep full precision.
    """
    if not rows:
        raise EmptyData("report has no rows")
    if fmt == "table":
        header = ("Model", "MSE", "RMSE", "MAE")
        body = [
            (
                row.model_name,
                _format_metric(row.mse),
                _format_metric(row.rmse),
                _format_metric(row.mae),
            )
            for row in rows
        ]
        widths = [
            max(len(header[j]), *(len(line[j]) for line in body)) for j in range(4)
        ]
        lines = ["  ".join(h.ljust(widths[j]) for j, h in enumerate(header)).rstrip()]
        for line in body:
            lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(line)).rstrip())
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(["Model", "MSE", "RMSE", "MAE", "Error"])
        for row in rows:
            writer.writerow(
                [
                    row.model_name,
                    "" if row.mse is None else repr(row.mse),
                    "" if row.rmse is None else repr(row.rmse),
                    "" if row.mae is None else repr(row.mae),
                    row.error or "",
                ]
            )
        return buffer.getvalue()
    if fmt == "json":
        doc = {
            "rows": [
                {
                    "model": row.model_name,
                    "mse": row.mse,
                    "rmse": row.rmse,
                    "mae": row.mae,
                    "error": row.error,
                }
                for row in rows
            ]
        }
        return json.dumps(doc, indent=2) + "\n"
    raise InvalidConfig(f"unknown report format {fmt!r}; expected one of {REPORT_FORMATS}")


# ---------------------------------------------------------------------------
# JSON config parsing
# ---------------------------------------------------------------------------

def synthetic_spec_from_json(doc) -> SyntheticSpec:
    if not isinstance(doc, dict):
        raise InvalidSpec("synthetic spec document must be an object")
    known = {"n_products", "categories", "brand_count", "missing_rates", "noise_scale", "seed"}
    extras = set(doc) - known
    if extras:
        raise InvalidSpec(f"unknown synthetic spec keys: {sorted(extras)}")
    kwargs = dict(doc)
    if "categories" in kwargs:
        kwargs["categories"] = tuple(kwargs["categories"])
    return SyntheticSpec(**kwargs)


def experiment_from_json(doc) -> ExperimentConfig:
    from .feature_pipeline import lexicon_from_json, plan_from_json

    if not isinstance(doc, dict):
        raise InvalidConfig("experiment document must be an object")
    known = {
        "dataset",
        "target_mode",
        "bins",
        "train_fraction",
        "seed",
        "models",
        "pipeline",
        "round_predictions",
        "output",
    }
    extras = set(doc) - known
    if extras:
        raise InvalidConfig(f"unknown experiment keys: {sorted(extras)}")

    dataset = doc.get("dataset")
    if not isinstance(dataset, dict):
        raise InvalidConfig("experiment needs a 'dataset' object")
    data_csv = dataset.get("csv")
    schema_path = dataset.get("schema")
    synthetic = None
    if "synthetic" in dataset:
        synthetic = synthetic_spec_from_json(dataset["synthetic"])

    models: tuple[ModelSpec, ...]
    if "models" in doc:
        entries = doc["models"]
        if not isinstance(entries, list):
            raise InvalidConfig("'models' must be a list")
        models = tuple(
            ModelSpec(
                name=e.get("name", e.get("kind", "?")),
                kind=e.get("kind", ""),
                config=e.get("config", {}),
            )
            for e in entries
        )
    else:
        models = default_models()

    plan = plan_from_json(doc["pipeline"]["plan"]) if "pipeline" in doc and "plan" in doc["pipeline"] else None
    lexicon = (
        lexicon_from_json(doc["pipeline"]["lexicon"])
        if "pipeline" in doc and "lexicon" in doc["pipeline"]
        else None
    )

    return ExperimentConfig(
        data_csv=data_csv,
        schema_path=schema_path,
        synthetic=synthetic,
        target_mode=doc.get("target_mode", BINNED_RANGE),
        bins=bins_from_json(doc["bins"]) if "bins" in doc else None,
        train_fraction=doc.get("train_fraction", 0.8),
        seed=doc.get("seed", 7),
        models=models,
        plan=plan,
        lexicon=lexicon,
        round_predictions=doc.get("round_predictions", False),
        output=doc.get("output"),
    )


def load_experiment(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidConfig(f"cannot read experiment file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"experiment file {path} is not valid JSON: {exc}") from exc
    return experiment_from_json(doc)
