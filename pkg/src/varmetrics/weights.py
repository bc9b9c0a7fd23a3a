"""Feature metrics: functions from a feature name to a non-negative value.

These plug into the variability-aware code metrics as replacements for
the plain +1 per referenced feature. Every weight is total: names that
never appear in the feature model still get a documented default (1 for
the constant and type weights, 0 for usage-derived counts, and the
configured fallback for locality).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from .models import Feature, FeatureModel
from .preprocess import GlobalTables


@dataclass(frozen=True)
class WeightFunction:
    id: str
    evaluate: Callable[[str], float]

    def __call__(self, feature: str) -> float:
        return self.evaluate(feature)


def _default_type_weights() -> dict[str, float]:
    return {"bool": 1.0, "tristate": 1.0, "int": 1.0, "hex": 1.0, "string": 1.0}


@dataclass(frozen=True)
class WeightConfig:
    type_weights: Mapping[str, float] = field(default_factory=_default_type_weights)
    hierarchy_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)  # top, mid, leaf
    locality_fallback: float = 1.0

    def validate(self) -> None:
        values = list(self.type_weights.values()) + list(self.hierarchy_weights)
        values.append(self.locality_fallback)
        if any(v < 0 for v in values):
            raise ValueError("weights must be non-negative")


def constant_one(
    model: FeatureModel, tables: GlobalTables, config: WeightConfig
) -> WeightFunction:
    """The baseline: every feature weighs 1."""
    return WeightFunction("One", lambda name: 1.0)


def sd_vp(model, tables: GlobalTables, config) -> WeightFunction:
    table = dict(tables.sd_vp)
    return WeightFunction("SD[vp]", lambda name: float(table.get(name, 0)))


def sd_file(model, tables: GlobalTables, config) -> WeightFunction:
    table = dict(tables.sd_file)
    return WeightFunction("SD[file]", lambda name: float(table.get(name, 0)))


def feature_size(model, tables: GlobalTables, config) -> WeightFunction:
    table = dict(tables.feature_size)
    return WeightFunction("FeatureSize", lambda name: float(table.get(name, 0)))


def noc(model: FeatureModel, tables, config, mode: str = "all") -> WeightFunction:
    """Constraint counts per feature.

    ``out`` counts constraints attached to the feature, ``in`` counts
    constraints attached elsewhere (or globally) that reference it,
    ``all`` counts every constraint referencing it.
    """
    if mode not in ("all", "out", "in"):
        raise ValueError(f"unknown noc mode {mode!r}")
    all_counts: dict[str, int] = {}
    out_counts: dict[str, int] = {}
    in_counts: dict[str, int] = {}
    for constraint in model.iter_constraints():
        if constraint.owner is not None:
            out_counts[constraint.owner] = out_counts.get(constraint.owner, 0) + 1
        for name in constraint.refs:
            all_counts[name] = all_counts.get(name, 0) + 1
            if constraint.owner != name:
                in_counts[name] = in_counts.get(name, 0) + 1
    table = {"all": all_counts, "out": out_counts, "in": in_counts}[mode]
    return WeightFunction(f"NoC[{mode}]", lambda name: float(table.get(name, 0)))


def coc(model: FeatureModel, tables, config, mode: str = "children_only") -> WeightFunction:
    """Connectivity per feature: direct children, optionally plus constraints."""
    if mode not in ("children_only", "children_plus_constraints"):
        raise ValueError(f"unknown coc mode {mode!r}")
    children: dict[str, int] = {}
    for f in model.features.values():
        if f.parent is not None:
            children[f.parent] = children.get(f.parent, 0) + 1
    if mode == "children_only":
        return WeightFunction(
            "CoC[children]", lambda name: float(children.get(name, 0))
        )
    noc_in = noc(model, tables, config, "in")
    noc_out = noc(model, tables, config, "out")
    return WeightFunction(
        "CoC[full]",
        lambda name: float(children.get(name, 0)) + noc_in(name) + noc_out(name),
    )


def feature_type(model: FeatureModel, tables, config: WeightConfig) -> WeightFunction:
    """Configured weight of the feature's type; unknown names count as bool."""
    weights = dict(_default_type_weights())
    weights.update(config.type_weights)

    def evaluate(name: str) -> float:
        f = model.feature(name)
        ftype = f.ftype if f is not None else "bool"
        return float(weights.get(ftype, weights["bool"]))

    return WeightFunction("Type", evaluate)


def _nesting_level(model: FeatureModel, name: str) -> int:
    level = 0
    f = model.feature(name)
    seen = set()
    while f is not None and f.parent is not None and f.name not in seen:
        seen.add(f.name)
        level += 1
        f = model.feature(f.parent)
    return level


def hierarchy(
    model: FeatureModel, tables, config: WeightConfig, mode: str = "nesting_level"
) -> WeightFunction:
    """Position of the feature in the hierarchy.

    ``nesting_level`` counts parent edges up to the root (top level is
    0). ``role_weights`` maps top, intermediate and leaf features to the
    configured triple; a feature that is both top and leaf counts as top.
    """
    if mode == "nesting_level":
        return WeightFunction(
            "Hierarchy[level]", lambda name: float(_nesting_level(model, name))
        )
    if mode != "role_weights":
        raise ValueError(f"unknown hierarchy mode {mode!r}")
    has_children = {
        f.parent for f in model.features.values() if f.parent is not None
    }
    top_w, mid_w, leaf_w = config.hierarchy_weights

    def evaluate(name: str) -> float:
        f = model.feature(name)
        parent = f.parent if f is not None else None
        if parent is None:
            return float(top_w)
        return float(mid_w) if name in has_children else float(leaf_w)

    return WeightFunction("Hierarchy[roles]", evaluate)


def _directory_parts(path: str) -> tuple[str, ...]:
    parts = path.split("/")[:-1]
    return tuple(p for p in parts if p not in ("", "."))


def directory_distance(a: str, b: str) -> int:
    """Edges between two files' directories: ups plus downs."""
    pa, pb = _directory_parts(a), _directory_parts(b)
    common = 0
    for x, y in zip(pa, pb):
        if x != y:
            break
        common += 1
    return (len(pa) - common) + (len(pb) - common)


def locality(
    model: FeatureModel, tables, config: WeightConfig, code_file: str
) -> WeightFunction:
    """Shortest directory distance between use and definition of a feature.

    Features without a defining file get the configured fallback.
    """

    def evaluate(name: str) -> float:
        f = model.feature(name)
        if f is None or not f.defining_files:
            return float(config.locality_fallback)
        return float(
            min(directory_distance(code_file, d) for d in f.defining_files)
        )

    return WeightFunction("Locality", evaluate)
