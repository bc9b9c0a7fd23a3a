"""Variability-aware per-function code metrics for C-like sources."""

from .code_metrics import FunctionInfo
from .engine import (
    MeasurementRow,
    MetricVariant,
    WEIGHT_IDS,
    collect_functions,
    enumerate_variants,
    expected_variant_count,
    run,
)
from .extractor import Corpus, ExtractionConfig, extract_file, extract_tree
from .formula import (
    And,
    Atom,
    Comparison,
    Expr,
    FALSE,
    Not,
    Or,
    TRUE,
    conjoin,
    parse_condition,
    parse_constraint,
    referenced_features,
)
from .models import (
    BuildModel,
    Constraint,
    Feature,
    FeatureModel,
    file_presence,
    load_build_model,
    load_feature_model,
)
from .nodes import (
    BranchStatement,
    CaseLabel,
    CodeNode,
    CppBlock,
    Function,
    LoopStatement,
    SingleStatement,
    SourceFile,
    UnparsedCode,
    count_statements,
    presence_condition,
)
from .preprocess import (
    CallEdge,
    GlobalTables,
    build_call_graph,
    build_feature_size,
    build_scattering,
    build_tables,
)
from .weights import WeightConfig, WeightFunction

__version__ = "0.1.0"
