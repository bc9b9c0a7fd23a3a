"""Enumerates metric variants and evaluates them per function.

The full grid is every family with all of its mode combinations, where
weight-consuming combinations repeat once per weight in the catalog.
With W catalog weights that makes 18 + 10*W variants (29 for McCabe's
three modes, 6 nesting, 4 + 2W fan, 3 statement counts, 5W feature
sets, 2 block counts, W tangling); the default catalog of 13 weights
yields 148. Canonical names sort lexicographically and never change
between runs.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field
from typing import Callable

from . import code_metrics, weights as weight_mod
from .code_metrics import FunctionInfo
from .errors import UnknownMetricError, UnknownWeightError
from .extractor import Corpus
from .formula import conjoin
from .models import BuildModel, FeatureModel
from .nodes import CppBlock, Function, iter_nodes
from .preprocess import GlobalTables
from .weights import WeightConfig, WeightFunction

FAMILIES = ("Blocks", "FPF", "Fan", "LoC", "McCabe", "ND", "TD")

#: canonical weight ids, in catalog order
WEIGHT_IDS = (
    "One",
    "SD[vp]",
    "SD[file]",
    "FeatureSize",
    "NoC[all]",
    "NoC[out]",
    "NoC[in]",
    "CoC[children]",
    "CoC[full]",
    "Type",
    "Hierarchy[level]",
    "Hierarchy[roles]",
    "Locality",
)


@dataclass(frozen=True)
class MetricVariant:
    family: str
    options: tuple[tuple[str, str], ...]
    weight_id: str  # "none" for unweighted variants
    canonical_name: str

    def option(self, key: str) -> str:
        for k, v in self.options:
            if k == key:
                return v
        raise KeyError(key)


@dataclass(frozen=True)
class MeasurementRow:
    file: str
    function: str
    line: int
    values: tuple


def expected_variant_count(weight_count: int) -> int:
    """The documented grid size for a catalog of *weight_count* weights."""
    return 18 + 10 * weight_count


def _grid(weight_ids) -> list[MetricVariant]:
    variants = []

    def add(family, options, weight_id, name):
        variants.append(
            MetricVariant(
                family=family,
                options=tuple(options),
                weight_id=weight_id,
                canonical_name=name,
            )
        )

    add("McCabe", [("mode", "code")], "none", "McCabe[code]")
    for mode in ("vp", "combined"):
        add("McCabe", [("mode", mode)], "none", f"McCabe[{mode}]")
        for wid in weight_ids:
            add("McCabe", [("mode", mode)], wid, f"McCabe[{mode}]×{wid}")
    for scope in ("code", "vp", "combined"):
        for agg in ("max", "avg"):
            add("ND", [("scope", scope), ("agg", agg)], "none", f"ND[{scope},{agg}]")
    for direction in ("in", "out"):
        for mode in ("classical", "conditional"):
            add(
                "Fan",
                [("direction", direction), ("mode", mode)],
                "none",
                f"Fan[{direction},{mode}]",
            )
        for wid in weight_ids:
            add(
                "Fan",
                [("direction", direction), ("mode", "weighted")],
                wid,
                f"Fan[{direction},weighted]×{wid}",
            )
    for kind in ("LoC", "LoF", "PLoF"):
        add("LoC", [("kind", kind)], "none", kind)
    for variant in range(1, 6):
        for wid in weight_ids:
            add("FPF", [("variant", str(variant))], wid, f"FPF[{variant}]×{wid}")
    for mode in ("if_only", "separate_else"):
        short = "if" if mode == "if_only" else "all"
        add("Blocks", [("mode", mode)], "none", f"Blocks[{short}]")
    for wid in weight_ids:
        add("TD", [], wid, f"TD×{wid}")

    variants.sort(key=lambda v: v.canonical_name)
    return variants


def enumerate_variants(
    family: str | None = None,
    variant_name: str | None = None,
    weight_ids: tuple[str, ...] = WEIGHT_IDS,
) -> list[MetricVariant]:
    """The deterministic, lexicographically ordered variant list.

    *family* restricts to one metric family; *variant_name* selects a
    single variant by its canonical name (an ASCII ``x`` may stand in
    for the multiplication sign).
    """
    for wid in weight_ids:
        if wid not in WEIGHT_IDS:
            raise UnknownWeightError(f"unknown weight {wid!r}")
    everything = _grid(weight_ids)
    if variant_name is not None:
        by_name = {v.canonical_name: v for v in everything}
        by_name.update(
            {v.canonical_name.replace("×", "x"): v for v in everything}
        )
        if variant_name not in by_name:
            if "×" in variant_name or "x" in variant_name:
                tail = variant_name.replace("×", "x").rsplit("x", 1)[-1]
                if tail and tail not in WEIGHT_IDS:
                    raise UnknownWeightError(f"unknown weight {tail!r}")
            raise UnknownMetricError(f"unknown metric variation {variant_name!r}")
        return [by_name[variant_name]]
    if family is not None:
        if family not in FAMILIES:
            raise UnknownMetricError(f"unknown metric family {family!r}")
        return [v for v in everything if v.family == family]
    return everything


class _WeightCache:
    """Builds weight functions once; locality is cached per file."""

    def __init__(self, model: FeatureModel, tables: GlobalTables, config: WeightConfig):
        self.model = model
        self.tables = tables
        self.config = config
        self._cache: dict[tuple[str, str | None], WeightFunction] = {}

    def get(self, weight_id: str, file: str) -> WeightFunction:
        key = (weight_id, file if weight_id == "Locality" else None)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        m, t, c = self.model, self.tables, self.config
        if weight_id == "One":
            built = weight_mod.constant_one(m, t, c)
        elif weight_id == "SD[vp]":
            built = weight_mod.sd_vp(m, t, c)
        elif weight_id == "SD[file]":
            built = weight_mod.sd_file(m, t, c)
        elif weight_id == "FeatureSize":
            built = weight_mod.feature_size(m, t, c)
        elif weight_id.startswith("NoC["):
            built = weight_mod.noc(m, t, c, weight_id[4:-1])
        elif weight_id == "CoC[children]":
            built = weight_mod.coc(m, t, c, "children_only")
        elif weight_id == "CoC[full]":
            built = weight_mod.coc(m, t, c, "children_plus_constraints")
        elif weight_id == "Type":
            built = weight_mod.feature_type(m, t, c)
        elif weight_id == "Hierarchy[level]":
            built = weight_mod.hierarchy(m, t, c, "nesting_level")
        elif weight_id == "Hierarchy[roles]":
            built = weight_mod.hierarchy(m, t, c, "role_weights")
        elif weight_id == "Locality":
            built = weight_mod.locality(m, t, c, file)
        else:
            raise UnknownWeightError(f"unknown weight {weight_id!r}")
        self._cache[key] = built
        return built


def collect_functions(corpus: Corpus) -> list[FunctionInfo]:
    """Every function in the corpus, ordered by (file, start line)."""
    infos = []
    for path in sorted(corpus.files):
        for node, node_path in iter_nodes(corpus.files[path]):
            if isinstance(node, Function):
                guards = [p.condition for p in node_path if isinstance(p, CppBlock)]
                infos.append(
                    FunctionInfo(file=path, node=node, presence=conjoin(guards))
                )
    infos.sort(key=lambda i: (i.file, i.node.start_line, i.node.name))
    return infos


def make_evaluator(
    variant: MetricVariant,
    tables: GlobalTables,
    build_model: BuildModel | None,
    cache: _WeightCache,
) -> Callable[[FunctionInfo], float]:
    """Bind a variant to a callable over FunctionInfo."""
    wid = variant.weight_id

    def weight_for(info: FunctionInfo) -> WeightFunction | None:
        return None if wid == "none" else cache.get(wid, info.file)

    if variant.family == "McCabe":
        mode = variant.option("mode")
        return lambda info: code_metrics.mccabe(info, mode, weight_for(info))
    if variant.family == "ND":
        scope, agg = variant.option("scope"), variant.option("agg")
        return lambda info: code_metrics.nesting_depth(info, scope, agg)
    if variant.family == "Fan":
        direction, mode = variant.option("direction"), variant.option("mode")
        return lambda info: code_metrics.fan(
            info, tables, direction, mode, weight_for(info)
        )
    if variant.family == "LoC":
        kind = variant.option("kind")
        return lambda info: code_metrics.loc_family(info, kind)
    if variant.family == "FPF":
        number = int(variant.option("variant"))
        return lambda info: code_metrics.features_per_function(
            info, number, weight_for(info), build_model
        )
    if variant.family == "Blocks":
        mode = variant.option("mode")
        return lambda info: code_metrics.blocks_per_function(info, mode)
    if variant.family == "TD":
        return lambda info: code_metrics.tangling_degree(info, weight_for(info))
    raise UnknownMetricError(f"unknown metric family {variant.family!r}")


def run(
    corpus: Corpus,
    feature_model: FeatureModel,
    build_model: BuildModel | None,
    tables: GlobalTables,
    variants: list[MetricVariant],
    weight_config: WeightConfig | None = None,
    threads: int = 1,
) -> tuple[list[MeasurementRow], list[str]]:
    """Evaluate all variants on every function.

    Returns one row per function, ordered by (file, start line), plus
    diagnostics for cells whose evaluator failed; a failed cell holds
    None and never aborts the run. The result does not depend on the
    thread count.
    """
    config = weight_config or WeightConfig()
    cache = _WeightCache(feature_model, tables, config)
    evaluators = [make_evaluator(v, tables, build_model, cache) for v in variants]
    infos = collect_functions(corpus)

    def measure(info: FunctionInfo):
        values = []
        diags = []
        for variant, evaluate in zip(variants, evaluators):
            try:
                value = evaluate(info)
                if not math.isfinite(value):
                    raise ValueError(f"non-finite value {value!r}")
                values.append(value)
            except Exception as exc:
                values.append(None)
                diags.append(
                    f"{info.file}:{info.node.start_line} {info.node.name}"
                    f" {variant.canonical_name}: {exc}"
                )
        row = MeasurementRow(
            file=info.file,
            function=info.node.name,
            line=info.node.start_line,
            values=tuple(values),
        )
        return row, diags

    if threads > 1 and infos:
        with concurrent.futures.ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(measure, infos))
    else:
        results = [measure(info) for info in infos]

    rows = [row for row, _ in results]
    diagnostics = [d for _, diags in results for d in diags]
    return rows, diagnostics
