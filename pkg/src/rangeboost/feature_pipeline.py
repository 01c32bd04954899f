"""Fit-on-train feature encoding: imputation, colour normalization, one-hot.

The encoder is fitted on the training partition only and then applied as a
pure function to any table with the same schema.  Its serialized form captures
everything the transform needs, so the encoding used at training time can be
shipped alongside a model and replayed at prediction time.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data_model import CATEGORICAL, FEATURE, NUMERIC, TARGET, ColumnSchema, DataTable
from .errors import EmptyTrain, InvalidConfig, SchemaMismatch

UNKNOWN_TOKEN = "unknown"
COMPOSITE_TOKEN = "composite"
COLOURFUL_TOKEN = "colourful"

DEFAULT_BASE_COLORS = frozenset(
    {
        "grey",
        "black",
        "white",
        "red",
        "blue",
        "green",
        "pink",
        "purple",
        "brown",
        "yellow",
        "orange",
        "gold",
        "silver",
    }
)
DEFAULT_MODIFIERS = frozenset({"dark", "light", "matte", "deep", "pale", "bright"})
DEFAULT_DELIMITERS = ("/", "&", ",", " and ")


@dataclass(frozen=True)
class ColorLexicon:
    """Vocabulary driving colour-string normalization."""

    base_colors: frozenset = DEFAULT_BASE_COLORS
    modifier_tokens: frozenset = DEFAULT_MODIFIERS
    multi_color_delimiters: tuple[str, ...] = DEFAULT_DELIMITERS

    def __post_init__(self):
        if not self.base_colors:
            raise InvalidConfig("colour lexicon needs at least one base colour")
        if not self.multi_color_delimiters:
            raise InvalidConfig("colour lexicon needs at least one delimiter")


def normalize_color(raw: str, lexicon: ColorLexicon | None = None) -> str:
    """Collapse a colour listing to a single token.

    Two delimiter-separated segments mean a dual-colour product ("composite"),
    three or more mean "colourful".  A single segment is reduced to its last
    base-colour token after dropping shade modifiers; strings with no known
    base colour pass through lowercased and trimmed.
    """
    lexicon = lexicon or ColorLexicon()
    s = raw.strip().lower()
    pattern = "|".join(re.escape(d) for d in lexicon.multi_color_delimiters)
    segments = [p.strip() for p in re.split(pattern, s) if p.strip()]
    if len(segments) >= 3:
        return COLOURFUL_TOKEN
    if len(segments) == 2:
        return COMPOSITE_TOKEN
    tokens = [t for t in s.split() if t not in lexicon.modifier_tokens]
    for token in reversed(tokens):
        if token in lexicon.base_colors:
            return token
    return s


@dataclass(frozen=True)
class ZeroFill:
    """Missing means zero (ratings, review counts, sales)."""


@dataclass(frozen=True)
class CrossFill:
    """Missing categorical takes its partner column's value; with no partner
    (or both missing) it becomes the "unknown" token."""

    partner: str | None = None


@dataclass(frozen=True)
class HierarchicalMean:
    """Missing numeric takes the mean of the most specific available group;
    the empty tier is the global mean and an exhausted ladder yields zero."""

    tiers: tuple[tuple[str, ...], ...] = (("Brand", "Products"), ("Products",), ())


@dataclass(frozen=True)
class ColorNormalize:
    """Normalize colour strings before one-hot encoding."""


_STRATEGY_NAMES = {
    ZeroFill: "zero_fill",
    CrossFill: "cross_fill",
    HierarchicalMean: "hierarchical_mean",
    ColorNormalize: "color_normalize",
}


@dataclass(frozen=True)
class ImputationPlan:
    """Exactly one strategy per feature column, plus ZeroFill on the target."""

    strategies: dict

    def for_column(self, name: str):
        return self.strategies[name]


def default_plan() -> ImputationPlan:
    return ImputationPlan(
        strategies={
            "Products": CrossFill(),
            "Brand": CrossFill(partner="Manufacturer"),
            "Colour": ColorNormalize(),
            "Manufacturer": CrossFill(partner="Brand"),
            "Price": HierarchicalMean(),
            "Rating": ZeroFill(),
            "Number of Rating": ZeroFill(),
            "Shipment": HierarchicalMean(),
            "Weight Pounds": HierarchicalMean(),
            "Sales": ZeroFill(),
        }
    )


def _validate_plan(plan: ImputationPlan, schema: Sequence[ColumnSchema]) -> None:
    by_name = {c.name: c for c in schema}
    for col in schema:
        if col.name not in plan.strategies:
            raise InvalidConfig(f"imputation plan is missing column {col.name!r}")
        strat = plan.strategies[col.name]
        if col.role == TARGET and not isinstance(strat, ZeroFill):
            raise InvalidConfig("the target column must use the zero-fill strategy")
        if isinstance(strat, (ZeroFill, HierarchicalMean)) and col.kind != NUMERIC:
            if col.role != TARGET:
                raise InvalidConfig(f"{col.name!r}: numeric strategy on a categorical column")
        if isinstance(strat, (CrossFill, ColorNormalize)) and col.kind != CATEGORICAL:
            raise InvalidConfig(f"{col.name!r}: categorical strategy on a numeric column")
        if isinstance(strat, CrossFill) and strat.partner is not None:
            partner = by_name.get(strat.partner)
            if partner is None or partner.kind != CATEGORICAL:
                raise InvalidConfig(
                    f"{col.name!r}: cross-fill partner {strat.partner!r} is not a categorical column"
                )
        if isinstance(strat, HierarchicalMean):
            for tier in strat.tiers:
                for key in tier:
                    key_col = by_name.get(key)
                    if key_col is None or key_col.kind != CATEGORICAL or key_col.role != FEATURE:
                        raise InvalidConfig(
                            f"{col.name!r}: group key {key!r} is not a categorical feature column"
                        )
    extras = set(plan.strategies) - set(by_name)
    if extras:
        raise InvalidConfig(f"imputation plan names unknown columns: {sorted(extras)}")


@dataclass(frozen=True)
class EncoderState:
    """Everything needed to replay the fitted transform on new rows."""

    schema: tuple[ColumnSchema, ...]
    plan: ImputationPlan
    lexicon: ColorLexicon
    vocabularies: dict
    group_means: dict
    layout: tuple[str, ...]


def _categorical_features(schema: Sequence[ColumnSchema]) -> list[ColumnSchema]:
    return [c for c in schema if c.role == FEATURE and c.kind == CATEGORICAL]


def _numeric_features(schema: Sequence[ColumnSchema]) -> list[ColumnSchema]:
    return [c for c in schema if c.role == FEATURE and c.kind == NUMERIC]


def _resolve_categoricals(table: DataTable, plan: ImputationPlan, lexicon: ColorLexicon) -> dict:
    """Apply cross-fill and colour normalization, returning per-column value
    lists where ``None`` marks a category that stays unencodable."""
    resolved: dict[str, list] = {}
    for col in _categorical_features(table.schema):
        strat = plan.for_column(col.name)
        raw = table.column(col.name)
        if isinstance(strat, CrossFill):
            partner = table.column(strat.partner) if strat.partner else [None] * table.n
            values = []
            for own, other in zip(raw, partner):
                if own is not None:
                    values.append(own)
                elif other is not None:
                    values.append(other)
                else:
                    values.append(UNKNOWN_TOKEN)
            resolved[col.name] = values
        elif isinstance(strat, ColorNormalize):
            resolved[col.name] = [None if v is None else normalize_color(v, lexicon) for v in raw]
        else:  # unreachable after plan validation
            resolved[col.name] = raw
    return resolved


def fit_pipeline(
    train: DataTable,
    plan: ImputationPlan | None = None,
    lexicon: ColorLexicon | None = None,
) -> EncoderState:
    """Fit vocabularies and group means on the training partition."""
    plan = plan or default_plan()
    lexicon = lexicon or ColorLexicon()
    if train.n == 0:
        raise EmptyTrain("cannot fit the feature pipeline on an empty table")
    _validate_plan(plan, train.schema)

    resolved = _resolve_categoricals(train, plan, lexicon)
    vocabularies = {
        col.name: tuple(sorted({v for v in resolved[col.name] if v is not None}))
        for col in _categorical_features(train.schema)
    }

    group_means: dict[str, tuple] = {}
    for col in _numeric_features(train.schema):
        strat = plan.for_column(col.name)
        if not isinstance(strat, HierarchicalMean):
            continue
        values = train.column(col.name)
        tiers = []
        for tier in strat.tiers:
            acc: dict[tuple, list] = {}
            for i, v in enumerate(values):
                if v is None:
                    continue
                key = tuple(resolved[k][i] for k in tier)
                if any(part is None for part in key):
                    continue
                bucket = acc.setdefault(key, [0.0, 0])
                bucket[0] += v
                bucket[1] += 1
            tiers.append({k: s / c for k, (s, c) in acc.items()})
        group_means[col.name] = tuple(tiers)

    layout = [c.name for c in _numeric_features(train.schema)]
    for col in _categorical_features(train.schema):
        layout.extend(f"{col.name}={entry}" for entry in vocabularies[col.name])

    return EncoderState(
        schema=train.schema,
        plan=plan,
        lexicon=lexicon,
        vocabularies=vocabularies,
        group_means=group_means,
        layout=tuple(layout),
    )


def transform(table: DataTable, state: EncoderState) -> tuple[np.ndarray, np.ndarray]:
    """Encode a table into a dense feature matrix and a target vector.

    The output contains no missing and no non-finite values: numeric gaps are
    filled per the plan, and categories that are missing or unseen at fit time
    one-hot to an all-zero indicator block.
    """
    if table.schema != state.schema:
        raise SchemaMismatch(
            f"table schema {table.column_names} does not match the fitted schema"
        )
    n = table.n
    resolved = _resolve_categoricals(table, state.plan, state.lexicon)

    blocks: list[np.ndarray] = []
    for col in _numeric_features(table.schema):
        strat = state.plan.for_column(col.name)
        values = table.column(col.name)
        if isinstance(strat, ZeroFill):
            filled = [0.0 if v is None else v for v in values]
        else:  # HierarchicalMean
            tiers = state.group_means[col.name]
            tier_keys = strat.tiers
            filled = []
            for i, v in enumerate(values):
                if v is not None:
                    filled.append(v)
                    continue
                fallback = 0.0
                for keys, means in zip(tier_keys, tiers):
                    key = tuple(resolved[k][i] for k in keys)
                    if any(part is None for part in key):
                        continue
                    if key in means:
                        fallback = means[key]
                        break
                filled.append(fallback)
        blocks.append(np.asarray(filled, dtype=np.float64).reshape(n, 1))

    for col in _categorical_features(table.schema):
        vocab = state.vocabularies[col.name]
        index = {v: j for j, v in enumerate(vocab)}
        block = np.zeros((n, len(vocab)), dtype=np.float64)
        for i, v in enumerate(resolved[col.name]):
            j = index.get(v)
            if j is not None:
                block[i, j] = 1.0
        blocks.append(block)

    if blocks:
        matrix = np.concatenate(blocks, axis=1)
    else:
        matrix = np.empty((n, 0), dtype=np.float64)
    target_values = table.column(table.target_schema().name)
    target = np.asarray([0.0 if v is None else v for v in target_values], dtype=np.float64)
    return matrix, target


def plan_to_json(plan: ImputationPlan) -> dict:
    doc = {}
    for name, strat in plan.strategies.items():
        entry: dict = {"strategy": _STRATEGY_NAMES[type(strat)]}
        if isinstance(strat, CrossFill):
            entry["partner"] = strat.partner
        if isinstance(strat, HierarchicalMean):
            entry["tiers"] = [list(t) for t in strat.tiers]
        doc[name] = entry
    return doc


def plan_from_json(doc) -> ImputationPlan:
    if not isinstance(doc, dict):
        raise InvalidConfig("imputation plan document must be an object")
    strategies = {}
    for name, entry in doc.items():
        kind = entry.get("strategy")
        if kind == "zero_fill":
            strategies[name] = ZeroFill()
        elif kind == "cross_fill":
            strategies[name] = CrossFill(partner=entry.get("partner"))
        elif kind == "hierarchical_mean":
            tiers = entry.get("tiers")
            if tiers is None:
                strategies[name] = HierarchicalMean()
            else:
                strategies[name] = HierarchicalMean(tiers=tuple(tuple(t) for t in tiers))
        elif kind == "color_normalize":
            strategies[name] = ColorNormalize()
        else:
            raise InvalidConfig(f"column {name!r}: unknown strategy {kind!r}")
    return ImputationPlan(strategies=strategies)


def lexicon_to_json(lexicon: ColorLexicon) -> dict:
    return {
        "base_colors": sorted(lexicon.base_colors),
        "modifier_tokens": sorted(lexicon.modifier_tokens),
        "multi_color_delimiters": list(lexicon.multi_color_delimiters),
    }


def lexicon_from_json(doc) -> ColorLexicon:
    if not isinstance(doc, dict):
        raise InvalidConfig("colour lexicon document must be an object")
    return ColorLexicon(
        base_colors=frozenset(doc.get("base_colors", DEFAULT_BASE_COLORS)),
        modifier_tokens=frozenset(doc.get("modifier_tokens", DEFAULT_MODIFIERS)),
        multi_color_delimiters=tuple(doc.get("multi_color_delimiters", DEFAULT_DELIMITERS)),
    )


def state_to_json(state: EncoderState) -> dict:
    from .data_model import schema_to_json

    return {
        "schema": schema_to_json(state.schema),
        "plan": plan_to_json(state.plan),
        "lexicon": lexicon_to_json(state.lexicon),
        "vocabularies": {k: list(v) for k, v in state.vocabularies.items()},
        "group_means": {
            col: [
                {"means": sorted([list(k), m] for k, m in tier.items())}
                for tier in tiers
            ]
            for col, tiers in state.group_means.items()
        },
        "layout": list(state.layout),
    }


def state_from_json(doc) -> EncoderState:
    from .data_model import schema_from_json

    if not isinstance(doc, dict):
        raise InvalidConfig("encoder state document must be an object")
    try:
        schema = schema_from_json(doc["schema"])
        plan = plan_from_json(doc["plan"])
        lexicon = lexicon_from_json(doc["lexicon"])
        vocabularies = {k: tuple(v) for k, v in doc["vocabularies"].items()}
        group_means = {
            col: tuple({tuple(k): float(m) for k, m in tier["means"]} for tier in tiers)
            for col, tiers in doc["group_means"].items()
        }
        layout = tuple(doc["layout"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfig(f"malformed encoder state document: {exc}") from exc
    return EncoderState(
        schema=schema,
        plan=plan,
        lexicon=lexicon,
        vocabularies=vocabularies,
        group_means=group_means,
        layout=layout,
    )


def save_state(state: EncoderState, path) -> None:
    Path(path).write_text(json.dumps(state_to_json(state), indent=2) + "\n", encoding="utf-8")


def load_state(path) -> EncoderState:
    return state_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
