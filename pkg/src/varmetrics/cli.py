"""Command line entry point.

Drives the pipeline: read a properties-style configuration, parse the
source tree, load the models, build the preprocessing tables, enumerate
the selected metric variants, evaluate them per function and write one
CSV. Paths and thread counts are validated before any work starts;
per-file parse failures only produce diagnostics.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .engine import MeasurementRow, MetricVariant, enumerate_variants, run
from .errors import MetricsError, ConfigError
from .extractor import DEFAULT_GLOBS, Corpus, ExtractionConfig, extract_tree
from .formula import referenced_features
from .models import BuildModel, FeatureModel, load_build_model, load_feature_model
from .nodes import CppBlock, dump, iter_nodes
from .preprocess import build_tables, dump_tables
from .weights import WeightConfig


@dataclass
class RunConfig:
    source_tree: Path
    feature_model: Path
    build_model: Path | None = None
    output: Path = Path("metrics.csv")
    family: str | None = None
    variant: str | None = None
    parse_threads: int = 1
    metric_threads: int = 1
    strict_features: bool = False
    file_globs: tuple[str, ...] = DEFAULT_GLOBS
    weight_config: WeightConfig = field(default_factory=WeightConfig)


def parse_properties(path: Path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; blanks ignored."""
    props: dict[str, str] = {}
    for ln, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path.name}:{ln}: expected 'key = value'")
        props[key.strip()] = value.strip()
    return props


def _positive_int(props: dict[str, str], key: str, default: int) -> int:
    raw = props.get(key)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{key} must be >= 1, got {value}")
    return value


def _weight_config(props: dict[str, str]) -> WeightConfig:
    type_weights: dict[str, float] = {}
    hierarchy = (1.0, 1.0, 1.0)
    fallback = 1.0
    for key, value in props.items():
        if key.startswith("weights.types."):
            try:
                type_weights[key[len("weights.types."):]] = float(value)
            except ValueError:
                raise ConfigError(f"{key} must be a number, got {value!r}") from None
        elif key == "weights.hierarchy":
            parts = [p.strip() for p in value.split(",")]
            if len(parts) != 3:
                raise ConfigError("weights.hierarchy needs three numbers: top,mid,leaf")
            try:
                hierarchy = (float(parts[0]), float(parts[1]), float(parts[2]))
            except ValueError:
                raise ConfigError(f"weights.hierarchy must be numbers, got {value!r}") from None
        elif key == "weights.locality.fallback":
            try:
                fallback = float(value)
            except ValueError:
                raise ConfigError(f"{key} must be a number, got {value!r}") from None
    if type_weights:
        config = WeightConfig(
            type_weights=type_weights,
            hierarchy_weights=hierarchy,
            locality_fallback=fallback,
        )
    else:
        config = WeightConfig(hierarchy_weights=hierarchy, locality_fallback=fallback)
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config


def build_config(props: dict[str, str]) -> RunConfig:
    """Validate properties into a RunConfig; raises ConfigError early."""
    if "source_tree" not in props:
        raise ConfigError("source_tree is required")
    source_tree = Path(props["source_tree"])
    if not source_tree.is_dir():
        raise ConfigError(f"source_tree is not a directory: {source_tree}")
    if "feature_model" not in props:
        raise ConfigError("feature_model is required")
    feature_model = Path(props["feature_model"])
    if not feature_model.is_file():
        raise ConfigError(f"feature_model is not a file: {feature_model}")
    build_model = None
    if "build_model" in props:
        build_model = Path(props["build_model"])
        if not build_model.is_file():
            raise ConfigError(f"build_model is not a file: {build_model}")
    output = Path(props.get("output", "metrics.csv"))
    if output.parent != Path("") and not output.parent.exists():
        raise ConfigError(f"output directory does not exist: {output.parent}")
    globs = DEFAULT_GLOBS
    if "code.extractor.files" in props:
        globs = tuple(
            g.strip() for g in props["code.extractor.files"].split(",") if g.strip()
        )
        if not globs:
            raise ConfigError("code.extractor.files must list at least one pattern")
    strict = props.get("strict_features", "false").strip().lower()
    if strict not in ("true", "false"):
        raise ConfigError(f"strict_features must be true or false, got {strict!r}")
    return RunConfig(
        source_tree=source_tree,
        feature_model=feature_model,
        build_model=build_model,
        output=output,
        family=props.get("metrics.code_metrics") or None,
        variant=props.get("metrics.function_measures.all_variations") or None,
        parse_threads=_positive_int(props, "code.extractor.threads", 1),
        metric_threads=_positive_int(props, "metrics.max_parallel_threads", 1),
        strict_features=(strict == "true"),
        file_globs=globs,
        weight_config=_weight_config(props),
    )


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


def write_csv(rows: list[MeasurementRow], variants: list[MetricVariant], path: Path) -> None:
    """Semicolon-separated UTF-8 with LF endings, stable across runs."""
    ordered = sorted(rows, key=lambda r: (r.file, r.line, r.function))
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter=";", lineterminator="\n")
        writer.writerow(["file", "function", "line"] + [v.canonical_name for v in variants])
        for row in ordered:
            writer.writerow(
                [row.file, row.function, str(row.line)]
                + [_format_value(v) for v in row.values]
            )


def _code_feature_names(corpus: Corpus) -> set[str]:
    names: set[str] = set()
    for tree in corpus.files.values():
        for node, _ in iter_nodes(tree):
            if isinstance(node, CppBlock):
                names.update(referenced_features(node.raw_condition))
    return names


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="varmetrics",
        description="Per-function code metrics for preprocessor-annotated C-like sources.",
    )
    parser.add_argument("config", help="properties file (key = value lines)")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a configuration key (repeatable)",
    )
    parser.add_argument("--dump-ast", action="store_true", help="print parsed trees")
    parser.add_argument(
        "--dump-tables", action="store_true", help="print preprocessing tables"
    )
    args = parser.parse_args(argv)

    started = time.monotonic()
    try:
        config_path = Path(args.config)
        if not config_path.is_file():
            raise ConfigError(f"config file not found: {config_path}")
        props = parse_properties(config_path)
        for override in args.set:
            key, sep, value = override.partition("=")
            if not sep:
                raise ConfigError(f"--set needs KEY=VALUE, got {override!r}")
            props[key.strip()] = value.strip()
        config = build_config(props)

        model = load_feature_model(config.feature_model, strict=config.strict_features)
        build = load_build_model(config.build_model) if config.build_model else None
        corpus = extract_tree(
            ExtractionConfig(
                source_tree=config.source_tree,
                file_globs=config.file_globs,
                parse_threads=config.parse_threads,
            )
        )
        warnings = list(model.warnings)
        warnings.extend(corpus.diagnostics)

        if args.dump_ast:
            for path in sorted(corpus.files):
                print(f"== {path} ==")
                print(dump(corpus.files[path]))

        tables = build_tables(corpus.files, threads=config.parse_threads)
        if args.dump_tables:
            print(dump_tables(tables))

        unknown = sorted(_code_feature_names(corpus) - set(model.features))
        for name in unknown:
            message = f"feature {name!r} is used in code but not modeled"
            if config.strict_features:
                raise ConfigError(message)
            warnings.append(message)

        variants = enumerate_variants(family=config.family, variant_name=config.variant)
        rows, cell_diagnostics = run(
            corpus,
            model,
            build,
            tables,
            variants,
            weight_config=config.weight_config,
            threads=config.metric_threads,
        )
        warnings.extend(cell_diagnostics)
        write_csv(rows, variants, config.output)
    except MetricsError as exc:
        print(f"varmetrics: error: {exc}", file=sys.stderr)
        return 1

    for message in warnings:
        print(f"varmetrics: warning: {message}", file=sys.stderr)
    elapsed = time.monotonic() - started
    print(
        f"varmetrics: parsed {len(corpus.files)} files"
        f" ({len(corpus.diagnostics)} failed), measured {len(rows)} functions"
        f" across {len(variants)} variants, {len(warnings)} warnings,"
        f" {elapsed:.2f}s -> {config.output}",
        file=sys.stderr,
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
