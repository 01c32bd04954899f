"""Command-line front end.

Subcommands: synth, train, predict, compare, bins.  Exit codes: 0 success,
2 config error, 3 data error, 4 model error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import boosted_trees
from .data_model import default_schema, load_csv, load_schema, schema_from_json, schema_to_json, write_csv
from .errors import ConfigError, DataError, InvalidConfig, MalformedModel, ModelError
from .eval_harness import (
    BINNED_RANGE,
    RAW_SALES,
    SyntheticSpec,
    generate_synthetic,
    load_experiment,
    render_report,
    run_experiment,
    synthetic_spec_from_json,
)
from .feature_pipeline import fit_pipeline, lexicon_from_json, plan_from_json, state_from_json, state_to_json, transform
from .range_binning import apply_binning, bins_from_json, bins_to_json, default_bins


def _read_json(path, what: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidConfig(f"cannot read {what} file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{what} file {path} is not valid JSON: {exc}") from exc


def _cmd_synth(args) -> int:
    spec = synthetic_spec_from_json(_read_json(args.spec, "synthetic spec")) if args.spec else SyntheticSpec()
    table = generate_synthetic(spec)
    write_csv(table, args.out)
    print(f"wrote {table.n} rows x {len(table.schema)} columns to {args.out}")
    return 0


def _cmd_train(args) -> int:
    config = _read_json(args.config, "train config") if args.config else {}
    if not isinstance(config, dict):
        raise InvalidConfig("train config must be a JSON object")
    known = {"target_mode", "bins", "model", "pipeline"}
    extras = set(config) - known
    if extras:
        raise InvalidConfig(f"unknown train config keys: {sorted(extras)}")

    schema = load_schema(args.schema) if args.schema else default_schema()
    target_mode = config.get("target_mode", BINNED_RANGE)
    if target_mode not in (RAW_SALES, BINNED_RANGE):
        raise InvalidConfig(f"unknown target mode {target_mode!r}")
    bins = bins_from_json(config["bins"]) if "bins" in config else default_bins()
    plan = None
    lexicon = None
    if "pipeline" in config:
        if "plan" in config["pipeline"]:
            plan = plan_from_json(config["pipeline"]["plan"])
        if "lexicon" in config["pipeline"]:
            lexicon = lexicon_from_json(config["pipeline"]["lexicon"])
    try:
        train_config = boosted_trees.TrainConfig(**config.get("model", {}))
    except TypeError as exc:
        raise InvalidConfig(f"bad model config: {exc}") from exc

    table = load_csv(args.data, schema)
    state = fit_pipeline(table, plan, lexicon)
    matrix, target = transform(table, state)
    if target_mode == BINNED_RANGE:
        target = apply_binning(target, bins)
    ensemble = boosted_trees.train(
        matrix, target, train_config, feature_names=state.layout, n_jobs=args.jobs
    )

    document = boosted_trees.to_json(ensemble)
    document["pipeline"] = state_to_json(state)
    document["schema"] = schema_to_json(schema)
    document["target_mode"] = target_mode
    document["bins"] = bins_to_json(bins) if target_mode == BINNED_RANGE else None
    boosted_trees.save_model(document, args.model_out)
    print(
        f"trained {len(ensemble.trees)} trees on {table.n} rows "
        f"({len(state.layout)} encoded features); model written to {args.model_out}"
    )
    return 0


def _cmd_predict(args) -> int:
    document = boosted_trees.load_model(args.model)
    ensemble = boosted_trees.from_json(document)
    if "pipeline" not in document or "schema" not in document:
        raise MalformedModel("model file lacks the embedded pipeline/schema needed for prediction")
    state = state_from_json(document["pipeline"])
    schema = schema_from_json(document["schema"])
    table = load_csv(args.data, schema, allow_missing_target=True)
    matrix, _ = transform(table, state)
    predictions = ensemble.predict(matrix)
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write("prediction\n")
        for value in predictions:
            handle.write(repr(float(value)) + "\n")
    print(f"wrote {len(predictions)} predictions to {args.out}")
    return 0


def _cmd_compare(args) -> int:
    config = load_experiment(args.experiment)
    rows = run_experiment(config, n_jobs=args.jobs)
    out = args.out or config.output
    table_text = render_report(rows, "table")
    if out:
        suffix = Path(out).suffix.lower()
        fmt = {".txt": "table", ".csv": "csv", ".json": "json"}.get(suffix)
        if fmt is None:
            raise InvalidConfig(f"cannot infer report format from {out!r}; use .txt, .csv, or .json")
        Path(out).write_text(render_report(rows, fmt), encoding="utf-8")
        print(f"report written to {out}")
    print(table_text, end="")
    return 0


def _cmd_bins(args) -> int:
    spec = default_bins()
    if args.show:
        for i, label in enumerate(spec.labels):
            lo, hi = spec.edges[i], spec.edges[i + 1]
            closer = "]" if i == spec.n_bins - 1 else ")"
            print(f"{i}: {label}  [{lo:g}, {hi:g}{closer}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rangeboost",
        description="Gradient-boosted sales-range forecasting and benchmarking",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic product dataset")
    p_synth.add_argument("--spec", help="synthetic spec JSON (defaults apply if omitted)")
    p_synth.add_argument("--out", required=True, help="output CSV path")
    p_synth.set_defaults(func=_cmd_synth)

    p_train = sub.add_parser("train", help="fit the boosted-tree model on a CSV")
    p_train.add_argument("--data", required=True, help="training CSV")
    p_train.add_argument("--schema", help="schema JSON (default product schema if omitted)")
    p_train.add_argument("--config", help="train config JSON")
    p_train.add_argument("--model-out", required=True, help="output model JSON path")
    p_train.add_argument("--jobs", type=int, default=1, help="worker threads for split search")
    p_train.set_defaults(func=_cmd_train)

    p_predict = sub.add_parser("predict", help="apply a trained model to new rows")
    p_predict.add_argument("--model", required=True, help="model JSON from `train`")
    p_predict.add_argument("--data", required=True, help="input CSV (target column optional)")
    p_predict.add_argument("--out", required=True, help="output predictions CSV")
    p_predict.set_defaults(func=_cmd_predict)

    p_compare = sub.add_parser("compare", help="run a multi-model comparison experiment")
    p_compare.add_argument("--experiment", required=True, help="experiment config JSON")
    p_compare.add_argument("--out", help="report path (.txt, .csv, or .json)")
    p_compare.add_argument("--jobs", type=int, default=1, help="worker threads for split search")
    p_compare.set_defaults(func=_cmd_compare)

    p_bins = sub.add_parser("bins", help="inspect the sales-range bins")
    p_bins.add_argument("--show", action="store_true", help="print the default bin spec")
    p_bins.set_defaults(func=_cmd_bins)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
